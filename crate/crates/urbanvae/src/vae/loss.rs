//! Loss terms: Bernoulli reconstruction NLL and Gaussian-prior KL.

use super::model::VaeParams;
use super::VaeError;
use crate::nn::Scalar;
use crate::raster::RasterImage;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` inside the
/// reconstruction loss.
pub const PROB_EPS: f64 = 1e-7;

/// Encoder log-variances are clamped to `[-LOGVAR_CLAMP, LOGVAR_CLAMP]`.
pub const LOGVAR_CLAMP: f64 = 10.0;

/// KL divergence of `N(mu, diag(exp(logvar)))` from the standard normal:
/// `0.5 * sum(mu^2 + exp(logvar) - 1 - logvar)`. Always >= 0, and 0 only
/// at `mu = 0, logvar = 0`.
pub fn kl_term<S: Scalar>(mu: &[S], logvar: &[S]) -> f64 {
    assert_eq!(mu.len(), logvar.len(), "kl_term dimension mismatch");
    mu.iter()
        .zip(logvar)
        .map(|(&m, &lv)| {
            let (m, lv) = (m.as_f64(), lv.as_f64());
            m * m + lv.exp() - 1.0 - lv
        })
        .sum::<f64>()
        * 0.5
}

/// Bernoulli negative log-likelihood summed over pixels:
/// `-sum(x ln p + (1 - x) ln(1 - p))` with `p` clamped away from 0 and 1.
pub fn reconstruction_nll<S: Scalar>(x: &[S], probs: &[S]) -> f64 {
    assert_eq!(x.len(), probs.len(), "reconstruction_nll shape mismatch");
    let mut acc = 0.0f64;
    for (&xv, &pv) in x.iter().zip(probs) {
        let xv = xv.as_f64();
        let p = pv.as_f64().clamp(PROB_EPS, 1.0 - PROB_EPS);
        acc -= xv * p.ln() + (1.0 - xv) * (1.0 - p).ln();
    }
    acc
}

/// Gradient of the clamped Bernoulli NLL w.r.t. the sigmoid's input:
/// `(p - x)` where the clamp is inactive, zero where it saturates.
pub(super) fn bce_pre_sigmoid_grad<S: Scalar>(p: S, x: S) -> S {
    let lo = S::from_f64(PROB_EPS);
    let hi = S::from_f64(1.0 - PROB_EPS);
    if p > lo && p < hi {
        p - x
    } else {
        S::zero()
    }
}

/// Loss terms of the training objective for one image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossTerms {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Single-sample estimate of the objective for one image with frozen
/// noise: `total = recon + kl` exactly.
pub fn loss_terms<S: Scalar>(
    params: &VaeParams<S>,
    img: &RasterImage,
    eps: &[f32],
) -> Result<LossTerms, VaeError> {
    let code = params.sample_code(img, eps)?;
    let probs = params.decode(&code.z)?;
    let recon = reconstruction_nll(img.pixels(), probs.pixels());
    let kl = kl_term(&code.mu, &code.logvar);
    Ok(LossTerms {
        total: recon + kl,
        recon,
        kl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn kl_is_zero_for_the_prior_itself() {
        assert_eq!(kl_term(&[0.0f64; 32], &[0.0; 32]), 0.0);
    }

    #[test]
    fn kl_single_dim_unit_mean_is_half() {
        // 0.5 * (1 + 1 - 1 - 0) = 0.5
        assert!((kl_term(&[1.0f64], &[0.0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kl_single_dim_logvar_ln4() {
        // 0.5 * (4 - 1 - ln 4) = 0.8068528194400547
        let got = kl_term(&[0.0f64], &[4.0f64.ln()]);
        assert!((got - 0.8068528194400547).abs() < 1e-12, "{got}");
    }

    #[test]
    fn matched_extremes_cost_almost_nothing() {
        let got = reconstruction_nll(&[1.0f64], &[1.0 - 1e-7]);
        assert!(got < 1.1e-7, "{got}");
    }

    #[test]
    fn half_probability_costs_ln_two() {
        let got = reconstruction_nll(&[1.0f64], &[0.5]);
        assert!((got - std::f64::consts::LN_2).abs() < 1e-9, "{got}");
    }

    #[test]
    fn uniform_image_cost_matches_hand_value() {
        // 4096 * (-ln 0.7314) = 1281.2074 by calculator
        let x = vec![1.0f64; 4096];
        let p = vec![0.7314f64; 4096];
        let got = reconstruction_nll(&x, &p);
        assert!((got - 1281.2074).abs() < 0.1, "{got}");
    }

    #[test]
    fn saturated_probabilities_have_zero_logit_gradient() {
        assert_eq!(bce_pre_sigmoid_grad(1.0f32, 1.0), 0.0);
        assert_eq!(bce_pre_sigmoid_grad(0.0f32, 0.0), 0.0);
        assert!((bce_pre_sigmoid_grad(0.5f32, 1.0) + 0.5).abs() < 1e-7);
    }

    proptest! {
        /// Nonnegative everywhere, zero only at the prior.
        #[test]
        fn kl_nonnegative_and_zero_iff_prior(mu in -4.0f64..4.0, lv in -4.0f64..4.0) {
            let v = kl_term(&[mu], &[lv]);
            prop_assert!(v >= 0.0);
            if mu.abs() > 1e-3 || lv.abs() > 1e-3 {
                prop_assert!(v > 1e-8);
            }
        }
    }
}
