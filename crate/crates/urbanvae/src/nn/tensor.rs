//! Row-major tensors over a flat buffer.

use super::{NnError, Scalar};

/// An n-dimensional array in row-major order.
///
/// Shapes are plain `Vec<usize>`; layers validate the dimensions they care
/// about and report mismatches by layer name.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<S> {
    shape: Vec<usize>,
    data: Vec<S>,
}

impl<S: Scalar> Tensor<S> {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![S::zero(); n],
        }
    }

    pub fn from_vec(shape: Vec<usize>, data: Vec<S>) -> Result<Self, NnError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(NnError::ShapeData {
                shape,
                expected,
                got: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<S> {
        self.data
    }

    /// Reinterprets the buffer under a new shape of equal length.
    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self, NnError> {
        let expected: usize = shape.iter().product();
        if expected != self.data.len() {
            return Err(NnError::ShapeData {
                shape,
                expected,
                got: self.data.len(),
            });
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn map(&self, f: impl Fn(S) -> S) -> Self {
        Self {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `self += other`. Shapes must match.
    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.shape, other.shape, "tensor add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a = *a + *b;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Precision conversion via `f64`.
    pub fn cast<T: Scalar>(&self) -> Tensor<T> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| T::from_f64(v.as_f64())).collect(),
        }
    }
}

pub(crate) fn shape_string(shape: &[usize]) -> String {
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    format!("[{}]", dims.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_validates_length() {
        let err = Tensor::<f32>::from_vec(vec![2, 3], vec![0.0; 5]).unwrap_err();
        assert!(matches!(err, NnError::ShapeData { expected: 6, got: 5, .. }));
        let t = Tensor::<f32>::from_vec(vec![2, 3], vec![1.0; 6]).unwrap();
        assert_eq!(t.numel(), 6);
    }

    #[test]
    fn reshape_preserves_data() {
        let t = Tensor::from_vec(vec![2, 3], (0..6).map(|v| v as f64).collect()).unwrap();
        let r = t.clone().reshape(vec![3, 2]).unwrap();
        assert_eq!(r.data(), t.data());
        assert!(t.clone().reshape(vec![4, 2]).is_err());
    }

    #[test]
    fn cast_roundtrip() {
        let t = Tensor::from_vec(vec![3], vec![1.5f32, -2.25, 0.0]).unwrap();
        let d: Tensor<f64> = t.cast();
        let back: Tensor<f32> = d.cast();
        assert_eq!(back.data(), t.data());
    }
}
