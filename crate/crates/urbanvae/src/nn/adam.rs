//! Adam optimizer with bias correction.

use super::{NnError, ParamTensor, Scalar, Tensor};

/// Per-parameter first/second moment estimates plus the step counter.
///
/// Moments are allocated lazily on the first step and keyed by position,
/// so callers must pass parameters in the same order every time.
#[derive(Clone, Debug)]
pub struct AdamState<S> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    pub t: u64,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
}

impl<S: Scalar> AdamState<S> {
    /// Defaults: beta1 0.9, beta2 0.999, eps 1e-8.
    pub fn new(lr: S) -> Self {
        Self {
            lr,
            beta1: S::from_f64(0.9),
            beta2: S::from_f64(0.999),
            eps: S::from_f64(1e-8),
            t: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    pub fn step<'a, I>(&mut self, params: I) -> Result<(), NnError>
    where
        I: IntoIterator<Item = &'a mut ParamTensor<S>>,
    {
        let params: Vec<&'a mut ParamTensor<S>> = params.into_iter().collect();
        if self.m.is_empty() {
            self.m = params
                .iter()
                .map(|p| Tensor::zeros(p.value.shape().to_vec()))
                .collect();
            self.v = self.m.clone();
        }
        if params.len() != self.m.len() {
            return Err(NnError::AdamArity {
                state: self.m.len(),
                got: params.len(),
            });
        }
        self.t += 1;
        let one = S::one();
        let bc1 = one - self.beta1.powi(self.t as i32);
        let bc2 = one - self.beta2.powi(self.t as i32);
        for (i, p) in params.into_iter().enumerate() {
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            let grad = p.grad.data_mut();
            let value = p.value.data_mut();
            for j in 0..value.len() {
                let g = grad[j];
                m[j] = self.beta1 * m[j] + (one - self.beta1) * g;
                v[j] = self.beta2 * v[j] + (one - self.beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                value[j] = value[j] - self.lr * m_hat / (v_hat.sqrt() + self.eps);
                grad[j] = S::zero();
            }
        }
        Ok(())
    }
}
