//! Elementwise activations with backward passes.

use super::{Scalar, Tensor};

pub fn relu<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(|v| if v > S::zero() { v } else { S::zero() })
}

/// Input gradient of ReLU given its *output* `y` (mask `y > 0`).
pub fn relu_backward<S: Scalar>(y: &Tensor<S>, grad_out: &Tensor<S>) -> Tensor<S> {
    assert_eq!(y.shape(), grad_out.shape(), "relu_backward shape mismatch");
    let data = y
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&yv, &g)| if yv > S::zero() { g } else { S::zero() })
        .collect();
    Tensor::from_vec(y.shape().to_vec(), data).expect("shape preserved")
}

/// Numerically stable logistic: never exponentiates a positive argument,
/// so it is well-behaved over the whole float range.
pub fn sigmoid_scalar<S: Scalar>(v: S) -> S {
    if v >= S::zero() {
        S::one() / (S::one() + (-v).exp())
    } else {
        let e = v.exp();
        e / (S::one() + e)
    }
}

pub fn sigmoid<S: Scalar>(x: &Tensor<S>) -> Tensor<S> {
    x.map(sigmoid_scalar)
}

/// Input gradient of sigmoid given its *output* `y`: `g * y * (1 - y)`.
pub fn sigmoid_backward<S: Scalar>(y: &Tensor<S>, grad_out: &Tensor<S>) -> Tensor<S> {
    assert_eq!(y.shape(), grad_out.shape(), "sigmoid_backward shape mismatch");
    let data = y
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&yv, &g)| g * yv * (S::one() - yv))
        .collect();
    Tensor::from_vec(y.shape().to_vec(), data).expect("shape preserved")
}
