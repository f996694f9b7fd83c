//! Floating-point abstraction over `f32` and `f64`.

use num_traits::Float;
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Element type for tensors and layers.
///
/// Training runs in `f32`; the gradient checker re-evaluates fragments in
/// `f64`. `gemm` dispatches to `matrixmultiply`'s sgemm/dgemm, which are
/// single-threaded and deterministic for fixed inputs.
pub trait Scalar: Float + Debug + Display + Sum + Send + Sync + 'static {
    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;

    /// `c := alpha * a.b + beta * c` on row-major slices with explicit
    /// strides. Panics if a slice is too short for the described matrix.
    #[allow(clippy::too_many_arguments)]
    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: usize,
        csa: usize,
        b: &[Self],
        rsb: usize,
        csb: usize,
        beta: Self,
        c: &mut [Self],
        rsc: usize,
        csc: usize,
    );
}

fn min_len(rows: usize, cols: usize, rs: usize, cs: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * rs + (cols - 1) * cs + 1
    }
}

fn check_extents(m: usize, k: usize, n: usize, lens: [usize; 3], strides: [(usize, usize); 3]) {
    let need_a = min_len(m, k, strides[0].0, strides[0].1);
    let need_b = min_len(k, n, strides[1].0, strides[1].1);
    let need_c = min_len(m, n, strides[2].0, strides[2].1);
    assert!(
        lens[0] >= need_a && lens[1] >= need_b && lens[2] >= need_c,
        "gemm: slice too short for {m}x{k}x{n} with given strides"
    );
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }

    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: usize,
        csa: usize,
        b: &[Self],
        rsb: usize,
        csb: usize,
        beta: Self,
        c: &mut [Self],
        rsc: usize,
        csc: usize,
    ) {
        if m == 0 || n == 0 || k == 0 {
            return;
        }
        check_extents(
            m,
            k,
            n,
            [a.len(), b.len(), c.len()],
            [(rsa, csa), (rsb, csb), (rsc, csc)],
        );
        unsafe {
            matrixmultiply::sgemm(
                m,
                k,
                n,
                alpha,
                a.as_ptr(),
                rsa as isize,
                csa as isize,
                b.as_ptr(),
                rsb as isize,
                csb as isize,
                beta,
                c.as_mut_ptr(),
                rsc as isize,
                csc as isize,
            );
        }
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }

    fn gemm(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: &[Self],
        rsa: usize,
        csa: usize,
        b: &[Self],
        rsb: usize,
        csb: usize,
        beta: Self,
        c: &mut [Self],
        rsc: usize,
        csc: usize,
    ) {
        if m == 0 || n == 0 || k == 0 {
            return;
        }
        check_extents(
            m,
            k,
            n,
            [a.len(), b.len(), c.len()],
            [(rsa, csa), (rsb, csb), (rsc, csc)],
        );
        unsafe {
            matrixmultiply::dgemm(
                m,
                k,
                n,
                alpha,
                a.as_ptr(),
                rsa as isize,
                csa as isize,
                b.as_ptr(),
                rsb as isize,
                csb as isize,
                beta,
                c.as_mut_ptr(),
                rsc as isize,
                csc as isize,
            );
        }
    }
}
