//! A minimal differentiable-layer engine.
//!
//! Just enough machinery for a convolutional encoder/decoder pair:
//! [`Conv2d`], [`ConvTranspose2d`], [`Dense`], ReLU and sigmoid, an Adam
//! optimizer, and a finite-difference gradient checker. Layers operate on
//! batched row-major [`Tensor`]s and are generic over [`Scalar`] so the
//! same code runs in `f32` for training and in `f64` inside the gradient
//! checker, where central differences need the extra precision.
//!
//! Convolution is cross-correlation (no kernel flip). All forward and
//! backward passes are deterministic functions of their inputs.

mod activation;
mod adam;
mod conv;
mod dense;
mod gradcheck;
mod scalar;
mod tensor;

pub use activation::{relu, relu_backward, sigmoid, sigmoid_backward};
pub use adam::AdamState;
pub use conv::{Conv2d, ConvTranspose2d};
pub use dense::Dense;
pub use gradcheck::{grad_check, GradCheckConfig, GradCheckEntry, GradCheckReport, ScalarLoss};
pub use scalar::Scalar;
pub use tensor::Tensor;

use thiserror::Error;

/// Errors from tensor and layer operations.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum NnError {
    #[error("shape {shape:?} implies {expected} elements but data has {got}")]
    ShapeData {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("{layer}: expected input shape {expected}, got {got}")]
    ShapeMismatch {
        layer: String,
        expected: String,
        got: String,
    },
    #[error("{layer}: input {h}x{w} is incompatible with kernel {k}, stride {stride}, pad {pad}")]
    BadGeometry {
        layer: String,
        h: usize,
        w: usize,
        k: usize,
        stride: usize,
        pad: usize,
    },
    #[error("adam state tracks {state} parameter tensors but step received {got}")]
    AdamArity { state: usize, got: usize },
}

/// A named parameter tensor with a gradient accumulator of the same shape.
#[derive(Clone, Debug)]
pub struct ParamTensor<S> {
    pub name: String,
    pub value: Tensor<S>,
    pub grad: Tensor<S>,
}

impl<S: Scalar> ParamTensor<S> {
    pub fn new(name: impl Into<String>, value: Tensor<S>) -> Self {
        let grad = Tensor::zeros(value.shape().to_vec());
        Self {
            name: name.into(),
            value,
            grad,
        }
    }

    /// Resets the gradient accumulator to zero.
    pub fn zero_grad(&mut self) {
        for g in self.grad.data_mut() {
            *g = S::zero();
        }
    }

    /// Converts value and (zeroed) gradient to another precision.
    pub fn cast<T: Scalar>(&self) -> ParamTensor<T> {
        ParamTensor::new(self.name.clone(), self.value.cast())
    }
}
