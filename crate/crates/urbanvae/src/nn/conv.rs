//! 2-D convolution and transposed convolution with manual backward passes.
//!
//! Both layers lower to GEMM: convolution via im2col, transposed
//! convolution as its exact adjoint via col2im. Inputs are batched
//! `[B, C, H, W]` tensors; gradients accumulate into the layer's
//! parameter tensors until the optimizer clears them.

use rand::Rng;

use super::tensor::shape_string;
use super::{NnError, ParamTensor, Scalar, Tensor};

/// Gathers sliding windows of `x` (`ch` x `h` x `w`) into `cols`
/// (`ch*k*k` rows by `out_h*out_w` columns). Out-of-bounds taps are zero.
fn im2col<S: Scalar>(
    x: &[S],
    ch: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
    cols: &mut [S],
) {
    let n = out_h * out_w;
    debug_assert_eq!(cols.len(), ch * k * k * n);
    let mut row = 0usize;
    for c in 0..ch {
        let xc = &x[c * h * w..(c + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let dst_base = row * n;
                for oy in 0..out_h {
                    let iy = (oy * stride + ki) as isize - pad as isize;
                    let dst = &mut cols[dst_base + oy * out_w..dst_base + (oy + 1) * out_w];
                    if iy < 0 || iy >= h as isize {
                        dst.fill(S::zero());
                        continue;
                    }
                    let src = &xc[(iy as usize) * w..(iy as usize) * w + w];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * stride + kj) as isize - pad as isize;
                        *d = if ix < 0 || ix >= w as isize {
                            S::zero()
                        } else {
                            src[ix as usize]
                        };
                    }
                }
                row += 1;
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds `cols` back onto the `ch` x `h` x `w`
/// grid. The caller zeroes `x` when a fresh result is wanted.
fn col2im<S: Scalar>(
    cols: &[S],
    ch: usize,
    h: usize,
    w: usize,
    k: usize,
    stride: usize,
    pad: usize,
    out_h: usize,
    out_w: usize,
    x: &mut [S],
) {
    let n = out_h * out_w;
    debug_assert_eq!(cols.len(), ch * k * k * n);
    let mut row = 0usize;
    for c in 0..ch {
        let xc = &mut x[c * h * w..(c + 1) * h * w];
        for ki in 0..k {
            for kj in 0..k {
                let src_base = row * n;
                for oy in 0..out_h {
                    let iy = (oy * stride + ki) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &cols[src_base + oy * out_w..src_base + (oy + 1) * out_w];
                    let dst = &mut xc[(iy as usize) * w..(iy as usize) * w + w];
                    for (ox, &v) in src.iter().enumerate() {
                        let ix = (ox * stride + kj) as isize - pad as isize;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] = dst[ix as usize] + v;
                        }
                    }
                }
                row += 1;
            }
        }
    }
}

fn kaiming_uniform<S: Scalar>(shape: Vec<usize>, fan_in: usize, rng: &mut impl Rng) -> Tensor<S> {
    let bound = (6.0 / fan_in as f64).sqrt();
    let data = (0..shape.iter().product::<usize>())
        .map(|_| S::from_f64(rng.gen_range(-bound..bound)))
        .collect();
    Tensor::from_vec(shape, data).expect("shape matches generated length")
}

/// Strided cross-correlation with zero padding.
///
/// Weight layout `[out_ch, in_ch, k, k]`, bias `[out_ch]`.
#[derive(Clone, Debug)]
pub struct Conv2d<S> {
    pub name: String,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub weight: ParamTensor<S>,
    pub bias: ParamTensor<S>,
}

impl<S: Scalar> Conv2d<S> {
    /// Kaiming-uniform weights (fan-in `in_ch * k * k`), zero bias.
    pub fn new(
        name: impl Into<String>,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let name = name.into();
        let fan_in = in_ch * kernel * kernel;
        let weight = kaiming_uniform(vec![out_ch, in_ch, kernel, kernel], fan_in, rng);
        Self {
            weight: ParamTensor::new(format!("{name}.weight"), weight),
            bias: ParamTensor::new(format!("{name}.bias"), Tensor::zeros(vec![out_ch])),
            name,
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
        }
    }

    fn check_input(&self, x: &Tensor<S>) -> Result<(usize, usize, usize), NnError> {
        match *x.shape() {
            [b, c, h, w] if c == self.in_ch => {
                self.out_hw(h, w)?;
                Ok((b, h, w))
            }
            _ => Err(NnError::ShapeMismatch {
                layer: self.name.clone(),
                expected: format!("[B, {}, H, W]", self.in_ch),
                got: shape_string(x.shape()),
            }),
        }
    }

    fn out_hw(&self, h: usize, w: usize) -> Result<(usize, usize), NnError> {
        let fits = |d: usize| {
            let padded = d + 2 * self.pad;
            if padded >= self.kernel && (padded - self.kernel) % self.stride == 0 {
                Some((padded - self.kernel) / self.stride + 1)
            } else {
                None
            }
        };
        match (fits(h), fits(w)) {
            (Some(oh), Some(ow)) if oh > 0 && ow > 0 => Ok((oh, ow)),
            _ => Err(NnError::BadGeometry {
                layer: self.name.clone(),
                h,
                w,
                k: self.kernel,
                stride: self.stride,
                pad: self.pad,
            }),
        }
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        let (b, h, w) = self.check_input(x)?;
        let (oh, ow) = self.out_hw(h, w)?;
        let (m, kk, n) = (self.out_ch, self.in_ch * self.kernel * self.kernel, oh * ow);
        let mut y = Tensor::zeros(vec![b, m, oh, ow]);
        let mut cols = vec![S::zero(); kk * n];
        let in_sz = self.in_ch * h * w;
        for bi in 0..b {
            im2col(
                &x.data()[bi * in_sz..(bi + 1) * in_sz],
                self.in_ch,
                h,
                w,
                self.kernel,
                self.stride,
                self.pad,
                oh,
                ow,
                &mut cols,
            );
            let yb = &mut y.data_mut()[bi * m * n..(bi + 1) * m * n];
            S::gemm(
                m,
                kk,
                n,
                S::one(),
                self.weight.value.data(),
                kk,
                1,
                &cols,
                n,
                1,
                S::zero(),
                yb,
                n,
                1,
            );
            for mi in 0..m {
                let bias = self.bias.value.data()[mi];
                for v in &mut yb[mi * n..(mi + 1) * n] {
                    *v = *v + bias;
                }
            }
        }
        Ok(y)
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor<S>, dy: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        let (b, h, w) = self.check_input(x)?;
        let (oh, ow) = self.out_hw(h, w)?;
        let (m, kk, n) = (self.out_ch, self.in_ch * self.kernel * self.kernel, oh * ow);
        if dy.shape() != [b, m, oh, ow] {
            return Err(NnError::ShapeMismatch {
                layer: self.name.clone(),
                expected: shape_string(&[b, m, oh, ow]),
                got: shape_string(dy.shape()),
            });
        }
        let mut dx = Tensor::zeros(x.shape().to_vec());
        let mut cols = vec![S::zero(); kk * n];
        let mut dcols = vec![S::zero(); kk * n];
        let in_sz = self.in_ch * h * w;
        for bi in 0..b {
            let xb = &x.data()[bi * in_sz..(bi + 1) * in_sz];
            let dyb = &dy.data()[bi * m * n..(bi + 1) * m * n];
            im2col(
                xb,
                self.in_ch,
                h,
                w,
                self.kernel,
                self.stride,
                self.pad,
                oh,
                ow,
                &mut cols,
            );
            // dW += dy_b . cols^T
            S::gemm(
                m,
                n,
                kk,
                S::one(),
                dyb,
                n,
                1,
                &cols,
                1,
                n,
                S::one(),
                self.weight.grad.data_mut(),
                kk,
                1,
            );
            for mi in 0..m {
                let sum = dyb[mi * n..(mi + 1) * n].iter().copied().sum::<S>();
                let g = &mut self.bias.grad.data_mut()[mi];
                *g = *g + sum;
            }
            // dcols = W^T . dy_b, then scatter back to the input grid
            S::gemm(
                kk,
                m,
                n,
                S::one(),
                self.weight.value.data(),
                1,
                kk,
                dyb,
                n,
                1,
                S::zero(),
                &mut dcols,
                n,
                1,
            );
            col2im(
                &dcols,
                self.in_ch,
                h,
                w,
                self.kernel,
                self.stride,
                self.pad,
                oh,
                ow,
                &mut dx.data_mut()[bi * in_sz..(bi + 1) * in_sz],
            );
        }
        Ok(dx)
    }
}

/// Strided transposed convolution: the exact adjoint of [`Conv2d`] with the
/// same kernel size, stride, and padding.
///
/// Weight layout `[in_ch, out_ch, k, k]`, bias `[out_ch]`. Sharing a
/// `Conv2d`'s weight buffer (with `in_ch`/`out_ch` swapped) satisfies
/// `<conv(x), y> == <x, conv_t(y)>` for zero biases.
#[derive(Clone, Debug)]
pub struct ConvTranspose2d<S> {
    pub name: String,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub weight: ParamTensor<S>,
    pub bias: ParamTensor<S>,
}

impl<S: Scalar> ConvTranspose2d<S> {
    pub fn new(
        name: impl Into<String>,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
        rng: &mut impl Rng,
    ) -> Self {
        let name = name.into();
        let fan_in = in_ch * kernel * kernel;
        let weight = kaiming_uniform(vec![in_ch, out_ch, kernel, kernel], fan_in, rng);
        Self {
            weight: ParamTensor::new(format!("{name}.weight"), weight),
            bias: ParamTensor::new(format!("{name}.bias"), Tensor::zeros(vec![out_ch])),
            name,
            in_ch,
            out_ch,
            kernel,
            stride,
            pad,
        }
    }

    fn check_input(&self, x: &Tensor<S>) -> Result<(usize, usize, usize), NnError> {
        match *x.shape() {
            [b, c, h, w] if c == self.in_ch => {
                self.out_hw(h, w)?;
                Ok((b, h, w))
            }
            _ => Err(NnError::ShapeMismatch {
                layer: self.name.clone(),
                expected: format!("[B, {}, H, W]", self.in_ch),
                got: shape_string(x.shape()),
            }),
        }
    }

    fn out_hw(&self, h: usize, w: usize) -> Result<(usize, usize), NnError> {
        let grow = |d: usize| {
            ((d - 1) * self.stride + self.kernel)
                .checked_sub(2 * self.pad)
                .filter(|&o| o > 0)
        };
        match (grow(h), grow(w)) {
            (Some(oh), Some(ow)) => Ok((oh, ow)),
            _ => Err(NnError::BadGeometry {
                layer: self.name.clone(),
                h,
                w,
                k: self.kernel,
                stride: self.stride,
                pad: self.pad,
            }),
        }
    }

    pub fn forward(&self, x: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        let (b, h, w) = self.check_input(x)?;
        let (oh, ow) = self.out_hw(h, w)?;
        let kk = self.out_ch * self.kernel * self.kernel;
        let n = h * w;
        let out_sz = self.out_ch * oh * ow;
        let mut y = Tensor::zeros(vec![b, self.out_ch, oh, ow]);
        let mut cols = vec![S::zero(); kk * n];
        let in_sz = self.in_ch * n;
        for bi in 0..b {
            // cols = W^T . x_b with W viewed as [in_ch, out_ch*k*k]
            S::gemm(
                kk,
                self.in_ch,
                n,
                S::one(),
                self.weight.value.data(),
                1,
                kk,
                &x.data()[bi * in_sz..(bi + 1) * in_sz],
                n,
                1,
                S::zero(),
                &mut cols,
                n,
                1,
            );
            let yb = &mut y.data_mut()[bi * out_sz..(bi + 1) * out_sz];
            col2im(
                &cols,
                self.out_ch,
                oh,
                ow,
                self.kernel,
                self.stride,
                self.pad,
                h,
                w,
                yb,
            );
            for ci in 0..self.out_ch {
                let bias = self.bias.value.data()[ci];
                for v in &mut yb[ci * oh * ow..(ci + 1) * oh * ow] {
                    *v = *v + bias;
                }
            }
        }
        Ok(y)
    }

    /// Accumulates weight/bias gradients and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor<S>, dy: &Tensor<S>) -> Result<Tensor<S>, NnError> {
        let (b, h, w) = self.check_input(x)?;
        let (oh, ow) = self.out_hw(h, w)?;
        let kk = self.out_ch * self.kernel * self.kernel;
        let n = h * w;
        if dy.shape() != [b, self.out_ch, oh, ow] {
            return Err(NnError::ShapeMismatch {
                layer: self.name.clone(),
                expected: shape_string(&[b, self.out_ch, oh, ow]),
                got: shape_string(dy.shape()),
            });
        }
        let mut dx = Tensor::zeros(x.shape().to_vec());
        let mut dcols = vec![S::zero(); kk * n];
        let in_sz = self.in_ch * n;
        let out_sz = self.out_ch * oh * ow;
        for bi in 0..b {
            let xb = &x.data()[bi * in_sz..(bi + 1) * in_sz];
            let dyb = &dy.data()[bi * out_sz..(bi + 1) * out_sz];
            for ci in 0..self.out_ch {
                let sum = dyb[ci * oh * ow..(ci + 1) * oh * ow]
                    .iter()
                    .copied()
                    .sum::<S>();
                let g = &mut self.bias.grad.data_mut()[ci];
                *g = *g + sum;
            }
            im2col(
                dyb,
                self.out_ch,
                oh,
                ow,
                self.kernel,
                self.stride,
                self.pad,
                h,
                w,
                &mut dcols,
            );
            // dW += x_b . dcols^T with dW viewed as [in_ch, out_ch*k*k]
            S::gemm(
                self.in_ch,
                n,
                kk,
                S::one(),
                xb,
                n,
                1,
                &dcols,
                1,
                n,
                S::one(),
                self.weight.grad.data_mut(),
                kk,
                1,
            );
            // dx = W . dcols
            S::gemm(
                self.in_ch,
                kk,
                n,
                S::one(),
                self.weight.value.data(),
                kk,
                1,
                &dcols,
                n,
                1,
                S::zero(),
                &mut dx.data_mut()[bi * in_sz..(bi + 1) * in_sz],
                n,
                1,
            );
        }
        Ok(dx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use rand::Rng;

    fn random_tensor(shape: Vec<usize>, rng: &mut impl Rng) -> Tensor<f64> {
        let data = (0..shape.iter().product::<usize>())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        Tensor::from_vec(shape, data).unwrap()
    }

    fn dot(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
        a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
    }

    /// Quadruple-loop cross-correlation, kept deliberately naive.
    fn conv_oracle(x: &Tensor<f64>, layer: &Conv2d<f64>) -> Tensor<f64> {
        let (b, c, h, w) = match *x.shape() {
            [b, c, h, w] => (b, c, h, w),
            _ => panic!("oracle wants 4-d input"),
        };
        let k = layer.kernel;
        let oh = (h + 2 * layer.pad - k) / layer.stride + 1;
        let ow = (w + 2 * layer.pad - k) / layer.stride + 1;
        let mut y = Tensor::zeros(vec![b, layer.out_ch, oh, ow]);
        for bi in 0..b {
            for m in 0..layer.out_ch {
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = layer.bias.value.data()[m];
                        for ci in 0..c {
                            for ki in 0..k {
                                for kj in 0..k {
                                    let iy = (oy * layer.stride + ki) as isize - layer.pad as isize;
                                    let ix = (ox * layer.stride + kj) as isize - layer.pad as isize;
                                    if iy < 0 || ix < 0 || iy >= h as isize || ix >= w as isize {
                                        continue;
                                    }
                                    let xv = x.data()
                                        [((bi * c + ci) * h + iy as usize) * w + ix as usize];
                                    let wv = layer.weight.value.data()
                                        [((m * c + ci) * k + ki) * k + kj];
                                    acc += xv * wv;
                                }
                            }
                        }
                        y.data_mut()[((bi * layer.out_ch + m) * oh + oy) * ow + ox] = acc;
                    }
                }
            }
        }
        y
    }

    #[test]
    fn zero_input_any_kernel_zero_bias_gives_zero() {
        let mut rng = seeds::rng(1, "conv-test", 0, 0);
        let layer = Conv2d::<f64>::new("c", 2, 3, 3, 1, 1, &mut rng);
        let x = Tensor::zeros(vec![1, 2, 5, 5]);
        let y = layer.forward(&x).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut rng = seeds::rng(2, "conv-test", 0, 0);
        let mut layer = Conv2d::<f64>::new("c", 1, 1, 3, 1, 1, &mut rng);
        let mut w = vec![0.0; 9];
        w[4] = 1.0; // center tap
        layer.weight.value = Tensor::from_vec(vec![1, 1, 3, 3], w).unwrap();
        layer.bias.value = Tensor::zeros(vec![1]);
        let x = random_tensor(vec![1, 1, 3, 3], &mut rng);
        let y = layer.forward(&x).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn ones_kernel_matches_window_sums_and_oracle() {
        let mut rng = seeds::rng(3, "conv-test", 0, 0);
        let mut layer = Conv2d::<f64>::new("c", 1, 1, 3, 1, 0, &mut rng);
        layer.weight.value = Tensor::from_vec(vec![1, 1, 3, 3], vec![1.0; 9]).unwrap();
        layer.bias.value = Tensor::zeros(vec![1]);
        let x = random_tensor(vec![1, 1, 5, 5], &mut rng);
        let y = layer.forward(&x).unwrap();
        let want = conv_oracle(&x, &layer);
        for (oy, (got, exp)) in y.data().iter().zip(want.data()).enumerate() {
            let rel = (got - exp).abs() / exp.abs().max(1e-30);
            assert!(rel < 1e-12, "pixel {oy}: {got} vs {exp}");
        }
        // spot-check one window sum by hand
        let xd = x.data();
        let manual: f64 = (0..3).flat_map(|r| (0..3).map(move |c| xd[r * 5 + c])).sum();
        assert!((y.data()[0] - manual).abs() < 1e-12);
    }

    #[test]
    fn forward_matches_oracle_on_random_shapes() {
        let mut rng = seeds::rng(4, "conv-test", 0, 0);
        for trial in 0..12 {
            let cin = rng.gen_range(1..4);
            let cout = rng.gen_range(1..4);
            let k = rng.gen_range(1..4);
            let stride = rng.gen_range(1..3);
            let pad = rng.gen_range(0..2);
            let oh = rng.gen_range(1usize..4);
            let h = match ((oh - 1) * stride + k).checked_sub(2 * pad) {
                Some(h) if h > 0 => h,
                _ => continue,
            };
            let layer = Conv2d::<f64>::new(format!("c{trial}"), cin, cout, k, stride, pad, &mut rng);
            let x = random_tensor(vec![2, cin, h, h], &mut rng);
            let y = layer.forward(&x).unwrap();
            let want = conv_oracle(&x, &layer);
            for (got, exp) in y.data().iter().zip(want.data()) {
                assert!((got - exp).abs() < 1e-12 * (1.0 + exp.abs()));
            }
        }
    }

    #[test]
    fn transpose_is_exact_adjoint_of_conv() {
        let mut rng = seeds::rng(5, "conv-test", 0, 0);
        for _ in 0..20 {
            let cin = rng.gen_range(1..4);
            let cout = rng.gen_range(1..4);
            let k = rng.gen_range(1..5);
            let stride = rng.gen_range(1..3);
            let pad = rng.gen_range(0..k.min(2));
            let oh: usize = rng.gen_range(1..5);
            let h = match ((oh - 1) * stride + k).checked_sub(2 * pad) {
                Some(h) if h > 0 => h,
                _ => continue,
            };

            let mut conv = Conv2d::<f64>::new("fwd", cin, cout, k, stride, pad, &mut rng);
            conv.bias.value = Tensor::zeros(vec![cout]);
            let mut tconv = ConvTranspose2d::<f64>::new("adj", cout, cin, k, stride, pad, &mut rng);
            tconv.weight.value = Tensor::from_vec(
                vec![cout, cin, k, k],
                conv.weight.value.data().to_vec(),
            )
            .unwrap();
            tconv.bias.value = Tensor::zeros(vec![cin]);

            let x = random_tensor(vec![1, cin, h, h], &mut rng);
            let y = random_tensor(vec![1, cout, oh, oh], &mut rng);
            let lhs = dot(&conv.forward(&x).unwrap(), &y);
            let rhs = dot(&x, &tconv.forward(&y).unwrap());
            assert!(
                (lhs - rhs).abs() < 1e-9,
                "adjoint identity violated: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn transpose_zero_input_broadcasts_bias() {
        let mut rng = seeds::rng(6, "conv-test", 0, 0);
        let mut layer = ConvTranspose2d::<f64>::new("t", 2, 3, 4, 2, 1, &mut rng);
        layer.bias.value = Tensor::from_vec(vec![3], vec![0.5, -1.0, 2.0]).unwrap();
        let x = Tensor::zeros(vec![1, 2, 4, 4]);
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.shape(), [1, 3, 8, 8]);
        for ci in 0..3 {
            let want = layer.bias.value.data()[ci];
            for &v in &y.data()[ci * 64..(ci + 1) * 64] {
                assert_eq!(v, want);
            }
        }
    }

    #[test]
    fn transpose_single_pixel_broadcasts_kernel() {
        let mut rng = seeds::rng(7, "conv-test", 0, 0);
        let mut layer = ConvTranspose2d::<f64>::new("t", 1, 1, 2, 2, 0, &mut rng);
        layer.bias.value = Tensor::zeros(vec![1]);
        let w = layer.weight.value.data().to_vec();
        let v = 1.75;
        let x = Tensor::from_vec(vec![1, 1, 1, 1], vec![v]).unwrap();
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.shape(), [1, 1, 2, 2]);
        for (got, wi) in y.data().iter().zip(&w) {
            assert!((got - v * wi).abs() < 1e-15);
        }
    }

    #[test]
    fn shape_errors_name_the_layer() {
        let mut rng = seeds::rng(8, "conv-test", 0, 0);
        let layer = Conv2d::<f64>::new("enc.conv0", 1, 8, 4, 2, 1, &mut rng);
        let bad = Tensor::zeros(vec![1, 3, 64, 64]);
        let err = layer.forward(&bad).unwrap_err();
        assert!(err.to_string().contains("enc.conv0"), "{err}");
        let odd = Tensor::zeros(vec![1, 1, 7, 7]);
        let err = layer.forward(&odd).unwrap_err();
        assert!(err.to_string().contains("enc.conv0"), "{err}");
    }
}
