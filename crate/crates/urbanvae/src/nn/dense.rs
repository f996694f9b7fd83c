//! Fully connected layer.

use rand::Rng;

use super::tensor::shape_string;
use super::{NnError, ParamTensor, Scalar, Tensor};

/// `y = x W^T + b` over a batch: input `[B, in]`, output `[B, out]`.
///
/// Weight layout `[out, in]`, bias `[out]`.
#[derive(Clone, Debug)]
pub struct Dense<S> {
    pub name: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight: ParamTensor<S>,
    pub bias: ParamTensor<S>,
}

impl<S: Scalar> Dense<S> {
    /// Kaiming-uniform weights (fan-in `in_dim`), zero bias.
    pub fn new(name: impl Into<String>, in_dim: usize, out_dim: usize, rng: &mut impl Rng) -> Self {
        let name = name.into();
        let bound = (6.0 / in_dim as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| S::from_f64(rng.gen_range(-bound..bound)))
            .collect();
        let weight = Tensor::from_vec(vec![out_dim, in_dim], data).expect("sized above");
        Self {
            weight: ParamTensor::new(format!("{name}.weight"), weight),
            bias: ParamTensor::new(format!("{name}.bias"), Tensor::zeros(vec![out_dim])),
            name,
            in_dim,
            out_dim,
        }
    }

    fn batch_of(&self, x: &Tensor<S>) -> Result<usize, NnError> {
        match *x.shape() {
            [b, d] if d == self.in_dim => Ok(b),
            _ => Err(NnError::ShapeMismatch {
                layer: self.name.clone(),
                expected: format!("[B, {}]", self.in_dim),
                got: shape_string(x.shape()),
            }),
        }
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        let b = self.batch_of(x)?;
        let (m, n) = (self.out_dim, self.in_dim);
        let mut y = Tensor::zeros(vec![b, m]);
        // y = x . W^T
        S::gemm(
            b,
            n,
            m,
            S::one(),
            x.data(),
            n,
            1,
            self.weight.value.data(),
            1,
            n,
            S::zero(),
            y.data_mut(),
            m,
            1,
        );
        for bi in 0..b {
            let row = &mut y.data_mut()[bi * m..(bi + 1) * m];
            for (v, bias) in row.iter_mut().zip(self.bias.value.data()) {
                *v = *v + *bias;
            }
        }
        Ok(y)
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor<S>, dy: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        let b = self.batch_of(x)?;
        if dy.shape() != [b, self.out_dim] {
            return Err(NnError::ShapeMismatch {
                layer: self.name.clone(),
                expected: shape_string(&[b, self.out_dim]),
                got: shape_string(dy.shape()),
            });
        }
        let (m, n) = (self.out_dim, self.in_dim);
        // dW += dy^T . x
        S::gemm(
            m,
            b,
            n,
            S::one(),
            dy.data(),
            1,
            m,
            x.data(),
            n,
            1,
            S::one(),
            self.weight.grad.data_mut(),
            n,
            1,
        );
        for bi in 0..b {
            for (g, &d) in self
                .bias
                .grad
                .data_mut()
                .iter_mut()
                .zip(&dy.data()[bi * m..(bi + 1) * m])
            {
                *g = *g + d;
            }
        }
        // dx = dy . W
        let mut dx = Tensor::zeros(vec![b, n]);
        S::gemm(
            b,
            m,
            n,
            S::one(),
            dy.data(),
            m,
            1,
            self.weight.value.data(),
            n,
            1,
            S::zero(),
            dx.data_mut(),
            n,
            1,
        );
        Ok(dx)
    }
}
