//! Model parameters, encode/decode, and the fused forward/backward pass.

use serde::{Deserialize, Serialize};

use super::loss::{bce_pre_sigmoid_grad, kl_term, reconstruction_nll, LOGVAR_CLAMP};
use super::{VaeError, LATENT_DIM};
use crate::nn::{
    relu, relu_backward, sigmoid, Conv2d, ConvTranspose2d, Dense, ParamTensor, Scalar, Tensor,
};
use crate::raster::{RasterImage, PIXELS, RESOLUTION};
use crate::seeds;

/// Network shape descriptor, stored in checkpoints.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq, Eq)]
pub struct Architecture {
    /// Input channels and spatial size.
    pub input: (usize, usize, usize),
    /// Encoder channel ladder; the decoder mirrors it.
    pub channels: Vec<usize>,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub latent_dim: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            input: (1, RESOLUTION, RESOLUTION),
            channels: vec![32, 64, 128, 256],
            kernel: 4,
            stride: 2,
            pad: 1,
            latent_dim: LATENT_DIM,
        }
    }
}

impl Architecture {
    /// Spatial side after the encoder ladder (each block halves it).
    pub fn feature_side(&self) -> usize {
        self.input.1 >> self.channels.len()
    }

    /// Flattened feature dimension feeding the dense heads.
    pub fn flat_dim(&self) -> usize {
        self.channels.last().copied().unwrap_or(0) * self.feature_side() * self.feature_side()
    }

    pub fn validate(&self) -> Result<(), VaeError> {
        let reject = |detail: String| Err(VaeError::Validation(detail));
        if self.latent_dim != LATENT_DIM {
            return reject(format!(
                "latent_dim must be {LATENT_DIM}, got {}",
                self.latent_dim
            ));
        }
        if self != &Architecture::default() {
            return reject("unsupported architecture descriptor".into());
        }
        Ok(())
    }
}

/// Sampled posterior code for one image.
#[derive(Clone, Debug, PartialEq)]
pub struct LatentCode {
    pub mu: Vec<f32>,
    pub logvar: Vec<f32>,
    /// `z = mu + exp(logvar / 2) * eps` for the recorded `eps`.
    pub z: Vec<f32>,
    pub eps: Vec<f32>,
}

/// `z = mu + exp(logvar / 2) * eps`, elementwise.
pub fn reparameterize<S: Scalar>(mu: &[S], logvar: &[S], eps: &[S]) -> Vec<S> {
    assert!(mu.len() == logvar.len() && mu.len() == eps.len());
    let half = S::from_f64(0.5);
    mu.iter()
        .zip(logvar)
        .zip(eps)
        .map(|((&m, &lv), &e)| m + (half * lv).exp() * e)
        .collect()
}

/// Encoder and decoder weights (the theta and phi of the loss).
#[derive(Clone, Debug)]
pub struct VaeParams<S> {
    pub arch: Architecture,
    pub enc_conv: Vec<Conv2d<S>>,
    pub enc_mu: Dense<S>,
    pub enc_logvar: Dense<S>,
    pub dec_dense: Dense<S>,
    pub dec_conv: Vec<ConvTranspose2d<S>>,
}

impl<S: Scalar> VaeParams<S> {
    /// Fresh Kaiming-uniform parameters from a seeded stream.
    pub fn init(arch: Architecture, seed: u64) -> Result<Self, VaeError> {
        arch.validate()?;
        let mut rng = seeds::rng(seed, "init", 0, 0);
        let (k, s, p) = (arch.kernel, arch.stride, arch.pad);
        let mut enc_conv = Vec::new();
        let mut in_ch = arch.input.0;
        for (i, &out_ch) in arch.channels.iter().enumerate() {
            enc_conv.push(Conv2d::new(format!("enc.conv{i}"), in_ch, out_ch, k, s, p, &mut rng));
            in_ch = out_ch;
        }
        let flat = arch.flat_dim();
        let enc_mu = Dense::new("enc.mu", flat, arch.latent_dim, &mut rng);
        let enc_logvar = Dense::new("enc.logvar", flat, arch.latent_dim, &mut rng);
        let dec_dense = Dense::new("dec.dense", arch.latent_dim, flat, &mut rng);
        let mut dec_conv = Vec::new();
        let mut ladder: Vec<usize> = arch.channels.clone();
        ladder.reverse(); // [256, 128, 64, 32]
        ladder.push(arch.input.0); // -> 1
        for (i, pair) in ladder.windows(2).enumerate() {
            dec_conv.push(ConvTranspose2d::new(
                format!("dec.deconv{i}"),
                pair[0],
                pair[1],
                k,
                s,
                p,
                &mut rng,
            ));
        }
        Ok(Self {
            arch,
            enc_conv,
            enc_mu,
            enc_logvar,
            dec_dense,
            dec_conv,
        })
    }

    /// All parameter tensors in checkpoint/optimizer order.
    pub fn params(&self) -> Vec<&ParamTensor<S>> {
        let mut out = Vec::with_capacity(22);
        for c in &self.enc_conv {
            out.push(&c.weight);
            out.push(&c.bias);
        }
        for d in [&self.enc_mu, &self.enc_logvar, &self.dec_dense] {
            out.push(&d.weight);
            out.push(&d.bias);
        }
        for c in &self.dec_conv {
            out.push(&c.weight);
            out.push(&c.bias);
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor<S>> {
        let mut out = Vec::with_capacity(22);
        for c in &mut self.enc_conv {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        out.push(&mut self.enc_mu.weight);
        out.push(&mut self.enc_mu.bias);
        out.push(&mut self.enc_logvar.weight);
        out.push(&mut self.enc_logvar.bias);
        out.push(&mut self.dec_dense.weight);
        out.push(&mut self.dec_dense.bias);
        for c in &mut self.dec_conv {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        out
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    /// Adds another instance's gradient accumulators into this one's.
    pub fn absorb_grads(&mut self, other: &Self) {
        let theirs = other.params();
        for (mine, theirs) in self.params_mut().into_iter().zip(theirs) {
            mine.grad.add_assign(&theirs.grad);
        }
    }

    pub fn cast<T: Scalar>(&self) -> VaeParams<T> {
        let mut out = VaeParams::<T>::init(self.arch.clone(), 0).expect("same architecture");
        for (dst, src) in out.params_mut().into_iter().zip(self.params()) {
            dst.value = src.value.cast();
        }
        out
    }

    /// Copies raw tensor values in [`Self::params`] order.
    pub fn set_param_values(&mut self, values: &[Tensor<S>]) {
        let params = self.params_mut();
        assert_eq!(params.len(), values.len(), "parameter count mismatch");
        for (p, v) in params.into_iter().zip(values) {
            assert_eq!(p.value.shape(), v.shape(), "parameter shape mismatch");
            p.value = v.clone();
        }
    }

    /// Deterministic posterior parameters for a batch `[B, 1, 64, 64]`:
    /// `(mu, logvar)`, each `[B, latent]`, log-variance clamped to
    /// `[-LOGVAR_CLAMP, LOGVAR_CLAMP]`.
    pub fn encode_batch(&self, x: &Tensor<S>) -> Result<(Tensor<S>, Tensor<S>), VaeError> {
        let trace = self.encode_trace(x)?;
        Ok((trace.mu, trace.logvar))
    }

    fn encode_trace(&self, x: &Tensor<S>) -> Result<EncTrace<S>, VaeError> {
        let b = match *x.shape() {
            [b, c, h, w] if (c, h, w) == self.arch.input => b,
            _ => {
                return Err(VaeError::Validation(format!(
                    "encoder expects [B, {}, {}, {}], got {:?}",
                    self.arch.input.0,
                    self.arch.input.1,
                    self.arch.input.2,
                    x.shape()
                )))
            }
        };
        let mut acts: Vec<Tensor<S>> = Vec::with_capacity(self.enc_conv.len());
        let mut h = x.clone();
        for conv in &self.enc_conv {
            h = relu(&conv.forward(&h)?);
            acts.push(h.clone());
        }
        let flat = h.reshape(vec![b, self.arch.flat_dim()])?;
        let mu = self.enc_mu.forward(&flat)?;
        let logvar_raw = self.enc_logvar.forward(&flat)?;
        let clamp = S::from_f64(LOGVAR_CLAMP);
        let logvar = logvar_raw.map(|v| v.min(clamp).max(-clamp));
        Ok(EncTrace {
            acts,
            flat,
            mu,
            logvar_raw,
            logvar,
        })
    }

    /// Decodes a batch of codes `[B, latent]` into probabilities
    /// `[B, 1, 64, 64]`.
    pub fn decode_batch(&self, z: &Tensor<S>) -> Result<Tensor<S>, VaeError> {
        Ok(self.decode_trace(z)?.probs)
    }

    fn decode_trace(&self, z: &Tensor<S>) -> Result<DecTrace<S>, VaeError> {
        let b = match *z.shape() {
            [b, d] if d == self.arch.latent_dim => b,
            _ => {
                return Err(VaeError::Validation(format!(
                    "decoder expects [B, {}], got {:?}",
                    self.arch.latent_dim,
                    z.shape()
                )))
            }
        };
        let side = self.arch.feature_side();
        let ch = *self.arch.channels.last().expect("non-empty ladder");
        let hidden = relu(&self.dec_dense.forward(z)?);
        let mut acts: Vec<Tensor<S>> = vec![hidden.clone().reshape(vec![b, ch, side, side])?];
        for conv in &self.dec_conv[..self.dec_conv.len() - 1] {
            let a = relu(&conv.forward(acts.last().expect("seeded above"))?);
            acts.push(a);
        }
        let logits = self
            .dec_conv
            .last()
            .expect("non-empty ladder")
            .forward(acts.last().expect("seeded above"))?;
        let probs = sigmoid(&logits);
        Ok(DecTrace { acts, probs })
    }

    /// Posterior mean and log-variance of one image.
    pub fn encode(&self, img: &RasterImage) -> Result<(Vec<f32>, Vec<f32>), VaeError> {
        let x = image_to_tensor::<S>(img);
        let (mu, lv) = self.encode_batch(&x)?;
        Ok((
            mu.data().iter().map(|v| v.as_f64() as f32).collect(),
            lv.data().iter().map(|v| v.as_f64() as f32).collect(),
        ))
    }

    /// Encodes and samples `z` with the provided noise.
    pub fn sample_code(&self, img: &RasterImage, eps: &[f32]) -> Result<LatentCode, VaeError> {
        let (mu, logvar) = self.encode(img)?;
        let z = reparameterize(&mu, &logvar, eps);
        Ok(LatentCode {
            mu,
            logvar,
            z,
            eps: eps.to_vec(),
        })
    }

    /// Decodes one latent code into a probability image.
    pub fn decode(&self, z: &[f32]) -> Result<RasterImage, VaeError> {
        if z.len() != self.arch.latent_dim {
            return Err(VaeError::Validation(format!(
                "decoder expects a {}-vector, got {}",
                self.arch.latent_dim,
                z.len()
            )));
        }
        let zt = Tensor::from_vec(
            vec![1, self.arch.latent_dim],
            z.iter().map(|&v| S::from_f64(v as f64)).collect(),
        )
        .expect("sized above");
        let probs = self.decode_batch(&zt)?;
        let pixels: Vec<f32> = probs.data().iter().map(|v| v.as_f64() as f32).collect();
        Ok(RasterImage::from_pixels("generated", pixels)?)
    }

    /// Forward + backward over a batch with one noise draw per sample.
    ///
    /// Gradients of `grad_scale * sum(per-sample loss)` accumulate into
    /// the parameter tensors (training passes `1 / batch_size`, so chunks
    /// of a batch combine into the batch-mean gradient). The input
    /// gradient is returned when requested; the gradient checker wants
    /// it, training does not.
    pub fn loss_and_gradients(
        &mut self,
        x: &Tensor<S>,
        eps: &Tensor<S>,
        grad_scale: f64,
        want_input_grad: bool,
    ) -> Result<(BatchLoss, Option<Tensor<S>>), VaeError> {
        let b = x.shape()[0];
        if eps.shape() != [b, self.arch.latent_dim] {
            return Err(VaeError::Validation(format!(
                "eps must be [B, {}], got {:?}",
                self.arch.latent_dim,
                eps.shape()
            )));
        }
        let latent = self.arch.latent_dim;
        let enc = self.encode_trace(x)?;
        let half = S::from_f64(0.5);
        let sigma = enc.logvar.map(|lv| (half * lv).exp());
        let z_data: Vec<S> = enc
            .mu
            .data()
            .iter()
            .zip(sigma.data())
            .zip(eps.data())
            .map(|((&m, &s), &e)| m + s * e)
            .collect();
        let z = Tensor::from_vec(vec![b, latent], z_data).expect("sized above");
        let dec = self.decode_trace(&z)?;

        // Per-sample losses, accumulated in f64.
        let mut per_sample = Vec::with_capacity(b);
        for bi in 0..b {
            let xs = &x.data()[bi * PIXELS..(bi + 1) * PIXELS];
            let ps = &dec.probs.data()[bi * PIXELS..(bi + 1) * PIXELS];
            let recon = reconstruction_nll(xs, ps);
            let kl = kl_term(
                &enc.mu.data()[bi * latent..(bi + 1) * latent],
                &enc.logvar.data()[bi * latent..(bi + 1) * latent],
            );
            per_sample.push(LossSample {
                total: recon + kl,
                recon,
                kl,
            });
        }

        // Backward. Every loss path carries grad_scale.
        let scale = S::from_f64(grad_scale);
        let dlogits_data: Vec<S> = dec
            .probs
            .data()
            .iter()
            .zip(x.data())
            .map(|(&p, &xv)| bce_pre_sigmoid_grad(p, xv) * scale)
            .collect();
        let mut grad = Tensor::from_vec(dec.probs.shape().to_vec(), dlogits_data)
            .expect("shape preserved");

        // Decoder stack in reverse.
        let last = self.dec_conv.len() - 1;
        grad = self.dec_conv[last].backward(&dec.acts[last], &grad)?;
        for i in (0..last).rev() {
            grad = relu_backward(&dec.acts[i + 1], &grad);
            grad = self.dec_conv[i].backward(&dec.acts[i], &grad)?;
        }
        let hidden_flat = dec.acts[0]
            .clone()
            .reshape(vec![b, self.arch.flat_dim()])?;
        grad = relu_backward(&hidden_flat, &grad.reshape(vec![b, self.arch.flat_dim()])?);
        let dz = self.dec_dense.backward(&z, &grad)?;

        // Reparameterization and KL paths into mu / logvar.
        let mut dmu = vec![S::zero(); b * latent];
        let mut dlv = vec![S::zero(); b * latent];
        for i in 0..b * latent {
            let dz_i = dz.data()[i];
            let mu_i = enc.mu.data()[i];
            let lv_i = enc.logvar.data()[i];
            dmu[i] = dz_i + mu_i * scale;
            dlv[i] = dz_i * eps.data()[i] * half * sigma.data()[i]
                + half * (lv_i.exp() - S::one()) * scale;
        }
        // Clamp on logvar: zero gradient where it was active.
        let clamp = S::from_f64(LOGVAR_CLAMP);
        for (g, &raw) in dlv.iter_mut().zip(enc.logvar_raw.data()) {
            if raw.abs() > clamp {
                *g = S::zero();
            }
        }
        let dmu = Tensor::from_vec(vec![b, latent], dmu).expect("sized above");
        let dlv = Tensor::from_vec(vec![b, latent], dlv).expect("sized above");

        let mut dflat = self.enc_mu.backward(&enc.flat, &dmu)?;
        dflat.add_assign(&self.enc_logvar.backward(&enc.flat, &dlv)?);

        // Encoder stack in reverse.
        let side = self.arch.feature_side();
        let ch = *self.arch.channels.last().expect("non-empty ladder");
        let mut grad = dflat.reshape(vec![b, ch, side, side])?;
        let mut dx = None;
        for i in (0..self.enc_conv.len()).rev() {
            grad = relu_backward(&enc.acts[i], &grad);
            let input = if i == 0 { x } else { &enc.acts[i - 1] };
            grad = self.enc_conv[i].backward(input, &grad)?;
            if i == 0 && want_input_grad {
                // x also enters the Bernoulli NLL directly:
                // d/dx of -(x ln p + (1-x) ln(1-p)) is -logit(p).
                let lo = S::from_f64(super::loss::PROB_EPS);
                let hi = S::from_f64(1.0 - super::loss::PROB_EPS);
                let mut full = grad.clone();
                for (g, &p) in full.data_mut().iter_mut().zip(dec.probs.data()) {
                    let pc = p.max(lo).min(hi);
                    *g = *g - (pc.ln() - (S::one() - pc).ln()) * scale;
                }
                dx = Some(full);
            }
        }

        let n = b as f64;
        let loss = BatchLoss {
            total: per_sample.iter().map(|l| l.total).sum::<f64>() / n,
            recon: per_sample.iter().map(|l| l.recon).sum::<f64>() / n,
            kl: per_sample.iter().map(|l| l.kl).sum::<f64>() / n,
            per_sample,
        };
        Ok((loss, dx))
    }

    /// Batch-mean loss terms without touching gradients.
    pub fn batch_loss(&self, x: &Tensor<S>, eps: &Tensor<S>) -> Result<BatchLoss, VaeError> {
        let b = x.shape()[0];
        let latent = self.arch.latent_dim;
        let (mu, logvar) = self.encode_batch(x)?;
        let z_data = reparameterize(mu.data(), logvar.data(), eps.data());
        let z = Tensor::from_vec(vec![b, latent], z_data).expect("sized by encode");
        let probs = self.decode_batch(&z)?;
        let mut per_sample = Vec::with_capacity(b);
        for bi in 0..b {
            let recon = reconstruction_nll(
                &x.data()[bi * PIXELS..(bi + 1) * PIXELS],
                &probs.data()[bi * PIXELS..(bi + 1) * PIXELS],
            );
            let kl = kl_term(
                &mu.data()[bi * latent..(bi + 1) * latent],
                &logvar.data()[bi * latent..(bi + 1) * latent],
            );
            per_sample.push(LossSample {
                total: recon + kl,
                recon,
                kl,
            });
        }
        let n = b as f64;
        Ok(BatchLoss {
            total: per_sample.iter().map(|l| l.total).sum::<f64>() / n,
            recon: per_sample.iter().map(|l| l.recon).sum::<f64>() / n,
            kl: per_sample.iter().map(|l| l.kl).sum::<f64>() / n,
            per_sample,
        })
    }
}

struct EncTrace<S> {
    acts: Vec<Tensor<S>>,
    flat: Tensor<S>,
    mu: Tensor<S>,
    logvar_raw: Tensor<S>,
    logvar: Tensor<S>,
}

struct DecTrace<S> {
    /// Post-ReLU activations entering each transposed conv.
    acts: Vec<Tensor<S>>,
    probs: Tensor<S>,
}

/// Per-sample loss values in `f64`.
#[derive(Clone, Copy, Debug)]
pub struct LossSample {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
}

/// Batch-mean loss terms plus the per-sample breakdown.
#[derive(Clone, Debug)]
pub struct BatchLoss {
    pub total: f64,
    pub recon: f64,
    pub kl: f64,
    pub per_sample: Vec<LossSample>,
}

/// Lifts one raster image into a `[1, 1, 64, 64]` tensor.
pub fn image_to_tensor<S: Scalar>(img: &RasterImage) -> Tensor<S> {
    Tensor::from_vec(
        vec![1, 1, RESOLUTION, RESOLUTION],
        img.pixels().iter().map(|&v| S::from_f64(v as f64)).collect(),
    )
    .expect("image pixel count fixed")
}

/// Stacks raster images into a `[B, 1, 64, 64]` tensor.
pub fn images_to_tensor<S: Scalar>(imgs: &[&RasterImage]) -> Tensor<S> {
    let mut data = Vec::with_capacity(imgs.len() * PIXELS);
    for img in imgs {
        data.extend(img.pixels().iter().map(|&v| S::from_f64(v as f64)));
    }
    Tensor::from_vec(vec![imgs.len(), 1, RESOLUTION, RESOLUTION], data)
        .expect("image pixel count fixed")
}

/// Pulls decoded probabilities back out as raster images.
pub fn tensor_to_images<S: Scalar>(t: &Tensor<S>, ids: &[String]) -> Vec<RasterImage> {
    let b = t.shape()[0];
    assert_eq!(b, ids.len(), "one id per image");
    (0..b)
        .map(|bi| {
            let pixels: Vec<f32> = t.data()[bi * PIXELS..(bi + 1) * PIXELS]
                .iter()
                .map(|v| v.as_f64() as f32)
                .collect();
            RasterImage::from_pixels(ids[bi].clone(), pixels).expect("probabilities lie in [0,1]")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;
    use rand::Rng;

    fn random_image(seed: u64) -> RasterImage {
        let mut rng = seeds::rng(seed, "vae-model-test", 0, 0);
        let mut img = RasterImage::zeros("t");
        for row in 0..RESOLUTION {
            for col in 0..RESOLUTION {
                if rng.gen_bool(0.2) {
                    img.set(row, col, 1.0);
                }
            }
        }
        img
    }

    fn model(seed: u64) -> VaeParams<f32> {
        VaeParams::init(Architecture::default(), seed).unwrap()
    }

    #[test]
    fn encode_is_deterministic_with_latent_32() {
        let params = model(1);
        let img = random_image(2);
        let (mu_a, lv_a) = params.encode(&img).unwrap();
        let (mu_b, lv_b) = params.encode(&img).unwrap();
        assert_eq!(mu_a.len(), 32);
        assert_eq!(lv_a.len(), 32);
        assert_eq!(mu_a, mu_b);
        assert_eq!(lv_a, lv_b);
    }

    #[test]
    fn zero_image_through_zero_heads_gives_zero_code() {
        let mut params = model(3);
        for head in [&mut params.enc_mu, &mut params.enc_logvar] {
            head.weight.value = Tensor::zeros(head.weight.value.shape().to_vec());
            head.bias.value = Tensor::zeros(head.bias.value.shape().to_vec());
        }
        let (mu, lv) = params.encode(&RasterImage::zeros("zero")).unwrap();
        assert!(mu.iter().all(|&v| v == 0.0));
        assert!(lv.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reparameterize_identities() {
        let mu = vec![0.25f32; 32];
        let lv = vec![0.0f32; 32];
        assert_eq!(reparameterize(&mu, &lv, &[0.0; 32]), mu);
        let eps: Vec<f32> = (0..32).map(|i| i as f32 / 10.0).collect();
        assert_eq!(reparameterize(&[0.0; 32], &[0.0; 32], &eps), eps);
        // mu = 1, logvar = ln 4, eps = 0.5 -> z = 1 + 2 * 0.5 = 2
        let z = reparameterize(&[1.0f64; 4], &[4.0f64.ln(); 4], &[0.5; 4]);
        for v in z {
            assert!((v - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decode_emits_probabilities_deterministically() {
        let params = model(4);
        let z: Vec<f32> = (0..32).map(|i| (i as f32 - 16.0) / 8.0).collect();
        let a = params.decode(&z).unwrap();
        let b = params.decode(&z).unwrap();
        assert_eq!(a, b);
        assert!(a.pixels().iter().all(|&p| p > 0.0 && p < 1.0));
        let err = params.decode(&[0.0; 7]).unwrap_err();
        assert!(err.to_string().contains("32"), "{err}");
    }

    #[test]
    fn zeroed_decoder_outputs_uniform_half() {
        let mut params = model(5);
        params.dec_dense.weight.value = Tensor::zeros(params.dec_dense.weight.value.shape().to_vec());
        params.dec_dense.bias.value = Tensor::zeros(vec![params.arch.flat_dim()]);
        for conv in &mut params.dec_conv {
            conv.weight.value = Tensor::zeros(conv.weight.value.shape().to_vec());
            conv.bias.value = Tensor::zeros(vec![conv.out_ch]);
        }
        let img = params.decode(&[0.7; 32]).unwrap();
        assert!(img.pixels().iter().all(|&p| p == 0.5));
    }

    #[test]
    fn loss_terms_are_additive_and_kl_nonnegative() {
        let params = model(6);
        let img = random_image(7);
        let eps = vec![0.3f32; 32];
        let terms = super::super::loss_terms(&params, &img, &eps).unwrap();
        assert_eq!(terms.total, terms.recon + terms.kl);
        assert!(terms.kl >= 0.0);
        assert!(terms.recon > 0.0);
    }
}
