//! Central finite-difference verification of analytic gradients.
//!
//! Runs entirely in `f64`: the fragment under test is evaluated at
//! perturbed parameter/input values with step `h = 1e-4` and compared
//! against the analytic gradients element by element.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Tensor;

/// A differentiable fragment mapping (parameters, input) to a scalar loss.
///
/// `loss` must be a pure function of its arguments; `gradients` returns
/// the analytic `(d loss / d params, d loss / d input)`.
pub trait ScalarLoss {
    /// One name per parameter tensor, used in failure reports.
    fn param_names(&self) -> Vec<String>;
    fn loss(&self, params: &[Tensor<f64>], input: &Tensor<f64>) -> f64;
    fn gradients(&self, params: &[Tensor<f64>], input: &Tensor<f64>)
        -> (Vec<Tensor<f64>>, Tensor<f64>);
}

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    pub rel_tol: f64,
    /// Absolute slack near zero: differences below this always pass.
    pub abs_tol: f64,
    /// Upper bound on checked elements; the rest are sampled out.
    pub max_elements: usize,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-4,
            rel_tol: 1e-4,
            abs_tol: 1e-6,
            max_elements: 400,
            seed: 0,
        }
    }
}

/// One checked element that exceeded tolerance.
#[derive(Clone, Debug)]
pub struct GradCheckEntry {
    /// Parameter tensor name, or `"input"`.
    pub name: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_err: f64,
    /// Failing elements, worst first (capped at 10).
    pub failures: Vec<GradCheckEntry>,
    pub passed: bool,
}

impl GradCheckReport {
    pub fn summary(&self) -> String {
        if self.passed {
            format!(
                "gradient check passed: {} elements, max rel err {:.3e}",
                self.checked, self.max_rel_err
            )
        } else {
            let worst = &self.failures[0];
            format!(
                "gradient check FAILED: {} of {} elements out of tolerance; worst {} [{}]: analytic {:.6e} vs numeric {:.6e} (rel {:.3e})",
                self.failures.len(),
                self.checked,
                worst.name,
                worst.index,
                worst.analytic,
                worst.numeric,
                worst.rel_err
            )
        }
    }
}

/// Compares analytic gradients of `target` against central differences.
///
/// Every parameter tensor and the input are covered; when the element
/// count exceeds `max_elements`, a seeded subset is drawn with at least
/// one element per tensor.
pub fn grad_check(
    target: &dyn ScalarLoss,
    params: &[Tensor<f64>],
    input: &Tensor<f64>,
    cfg: &GradCheckConfig,
) -> GradCheckReport {
    let names = target.param_names();
    assert_eq!(names.len(), params.len(), "one name per parameter tensor");
    let (analytic_params, analytic_input) = target.gradients(params, input);

    // Slots: (tensor index or usize::MAX for input, element index).
    let mut slots: Vec<(usize, usize)> = Vec::new();
    let total: usize = params.iter().map(Tensor::numel).sum::<usize>() + input.numel();
    if total <= cfg.max_elements {
        for (ti, p) in params.iter().enumerate() {
            slots.extend((0..p.numel()).map(|e| (ti, e)));
        }
        slots.extend((0..input.numel()).map(|e| (usize::MAX, e)));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let tensors: Vec<(usize, usize)> = params
            .iter()
            .map(Tensor::numel)
            .enumerate()
            .chain(std::iter::once((usize::MAX, input.numel())))
            .map(|(ti, n)| (ti, n))
            .collect();
        let per_tensor = (cfg.max_elements / tensors.len()).max(1);
        for &(ti, n) in &tensors {
            let take = per_tensor.min(n);
            for e in sample(&mut rng, n, take) {
                slots.push((ti, e));
            }
        }
    }

    let mut work_params: Vec<Tensor<f64>> = params.to_vec();
    let mut work_input = input.clone();
    let mut failures: Vec<GradCheckEntry> = Vec::new();
    let mut max_rel: f64 = 0.0;
    let h = cfg.step;

    for &(ti, e) in &slots {
        let analytic = if ti == usize::MAX {
            analytic_input.data()[e]
        } else {
            analytic_params[ti].data()[e]
        };
        let original = if ti == usize::MAX {
            work_input.data()[e]
        } else {
            work_params[ti].data()[e]
        };
        let eval_at = |v: f64, params: &mut [Tensor<f64>], input: &mut Tensor<f64>| -> f64 {
            if ti == usize::MAX {
                input.data_mut()[e] = v;
            } else {
                params[ti].data_mut()[e] = v;
            }
            target.loss(params, input)
        };
        let plus = eval_at(original + h, &mut work_params, &mut work_input);
        let minus = eval_at(original - h, &mut work_params, &mut work_input);
        eval_at(original, &mut work_params, &mut work_input);
        let numeric = (plus - minus) / (2.0 * h);

        let diff = (analytic - numeric).abs();
        if diff <= cfg.abs_tol {
            continue;
        }
        let rel = diff / analytic.abs().max(numeric.abs());
        max_rel = max_rel.max(rel);
        if rel >= cfg.rel_tol {
            failures.push(GradCheckEntry {
                name: if ti == usize::MAX {
                    "input".to_string()
                } else {
                    names[ti].clone()
                },
                index: e,
                analytic,
                numeric,
                rel_err: rel,
            });
        }
    }

    failures.sort_by(|a, b| b.rel_err.total_cmp(&a.rel_err));
    failures.truncate(10);
    GradCheckReport {
        checked: slots.len(),
        max_rel_err: max_rel,
        passed: failures.is_empty(),
        failures,
    }
}
