//! Verify every layer's backward pass (and the full training objective)
//! against central finite differences in f64.
//!
//! ```bash
//! cargo run --release --example gradient_check
//! ```

use urbanvae::nn::GradCheckConfig;
use urbanvae::vae::gradcheck_suite;

fn main() {
    let cases = gradcheck_suite(5, 4, &GradCheckConfig::default());
    let mut all_passed = true;
    for case in &cases {
        println!(
            "{}  {:<45} {} elements, max rel err {:.2e}",
            if case.report.passed { "PASS" } else { "FAIL" },
            case.name,
            case.report.checked,
            case.report.max_rel_err
        );
        all_passed &= case.report.passed;
    }
    assert!(all_passed, "a gradient check failed");
    println!("\nall {} checks passed at 1e-4 relative tolerance", cases.len());
}
