//! Finite-difference verification of every layer type and the full loss.
//!
//! The suite re-evaluates each fragment in `f64` (see
//! [`crate::nn::grad_check`]) so the analytic backward passes can be held
//! to a 1e-4 relative tolerance. Fragments scalarize layer outputs with a
//! fixed random projection followed by a nonlinearity, which exercises
//! generic gradient flow; the final case checks the actual training
//! objective with frozen noise.

use std::cell::RefCell;

use rand::Rng;

use super::model::{image_to_tensor, Architecture, VaeParams};
use crate::nn::{
    grad_check, relu, relu_backward, sigmoid, sigmoid_backward, Conv2d, ConvTranspose2d, Dense,
    GradCheckConfig, GradCheckReport, ScalarLoss, Tensor,
};
use crate::raster::RasterImage;
use crate::seeds;
use crate::LATENT_DIM;

/// One named gradient check.
pub struct GradCheckCase {
    pub name: String,
    pub report: GradCheckReport,
}

enum LayerKind {
    Conv(Conv2d<f64>),
    ConvT(ConvTranspose2d<f64>),
    Dense(Dense<f64>),
}

/// Scalarizes a layer as `sum(r * relu(layer(x)))` (or sigmoid for the
/// dense case) with a fixed projection `r`.
struct LayerFragment {
    layer: RefCell<LayerKind>,
    projection: Vec<f64>,
    use_sigmoid: bool,
}

impl LayerFragment {
    fn forward_from(&self, params: &[Tensor<f64>], input: &Tensor<f64>) -> (Tensor<f64>, Tensor<f64>) {
        let mut layer = self.layer.borrow_mut();
        let (w, b) = (&params[0], &params[1]);
        let raw = match &mut *layer {
            LayerKind::Conv(l) => {
                l.weight.value = w.clone();
                l.bias.value = b.clone();
                l.forward(input).expect("fragment shapes fixed")
            }
            LayerKind::ConvT(l) => {
                l.weight.value = w.clone();
                l.bias.value = b.clone();
                l.forward(input).expect("fragment shapes fixed")
            }
            LayerKind::Dense(l) => {
                l.weight.value = w.clone();
                l.bias.value = b.clone();
                l.forward(input).expect("fragment shapes fixed")
            }
        };
        let act = if self.use_sigmoid { sigmoid(&raw) } else { relu(&raw) };
        (raw, act)
    }
}

impl ScalarLoss for LayerFragment {
    fn param_names(&self) -> Vec<String> {
        let layer = self.layer.borrow();
        let (w, b) = match &*layer {
            LayerKind::Conv(l) => (l.weight.name.clone(), l.bias.name.clone()),
            LayerKind::ConvT(l) => (l.weight.name.clone(), l.bias.name.clone()),
            LayerKind::Dense(l) => (l.weight.name.clone(), l.bias.name.clone()),
        };
        vec![w, b]
    }

    fn loss(&self, params: &[Tensor<f64>], input: &Tensor<f64>) -> f64 {
        let (_, act) = self.forward_from(params, input);
        act.data()
            .iter()
            .zip(&self.projection)
            .map(|(a, r)| a * r)
            .sum()
    }

    fn gradients(
        &self,
        params: &[Tensor<f64>],
        input: &Tensor<f64>,
    ) -> (Vec<Tensor<f64>>, Tensor<f64>) {
        let (_, act) = self.forward_from(params, input);
        let proj = Tensor::from_vec(act.shape().to_vec(), self.projection.clone())
            .expect("projection sized to output");
        let draw = if self.use_sigmoid {
            sigmoid_backward(&act, &proj)
        } else {
            relu_backward(&act, &proj)
        };
        let mut layer = self.layer.borrow_mut();
        let (dx, dw, db) = match &mut *layer {
            LayerKind::Conv(l) => {
                l.weight.zero_grad();
                l.bias.zero_grad();
                let dx = l.backward(input, &draw).expect("fragment shapes fixed");
                (dx, l.weight.grad.clone(), l.bias.grad.clone())
            }
            LayerKind::ConvT(l) => {
                l.weight.zero_grad();
                l.bias.zero_grad();
                let dx = l.backward(input, &draw).expect("fragment shapes fixed");
                (dx, l.weight.grad.clone(), l.bias.grad.clone())
            }
            LayerKind::Dense(l) => {
                l.weight.zero_grad();
                l.bias.zero_grad();
                let dx = l.backward(input, &draw).expect("fragment shapes fixed");
                (dx, l.weight.grad.clone(), l.bias.grad.clone())
            }
        };
        (vec![dw, db], dx)
    }
}

/// Training objective with frozen noise, as a checkable fragment.
struct FullLossFragment {
    model: RefCell<VaeParams<f64>>,
    eps: Tensor<f64>,
    names: Vec<String>,
}

impl ScalarLoss for FullLossFragment {
    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn loss(&self, params: &[Tensor<f64>], input: &Tensor<f64>) -> f64 {
        let mut model = self.model.borrow_mut();
        model.set_param_values(params);
        let loss = model
            .batch_loss(input, &self.eps)
            .expect("fragment shapes fixed");
        loss.per_sample[0].total
    }

    fn gradients(
        &self,
        params: &[Tensor<f64>],
        input: &Tensor<f64>,
    ) -> (Vec<Tensor<f64>>, Tensor<f64>) {
        let mut model = self.model.borrow_mut();
        model.set_param_values(params);
        model.zero_grads();
        let (_, dx) = model
            .loss_and_gradients(input, &self.eps, 1.0, true)
            .expect("fragment shapes fixed");
        let grads = model.params().iter().map(|p| p.grad.clone()).collect();
        (grads, dx.expect("input gradient requested"))
    }
}

fn random_tensor(shape: Vec<usize>, scale: f64, rng: &mut impl Rng) -> Tensor<f64> {
    let data = (0..shape.iter().product::<usize>())
        .map(|_| rng.gen_range(-scale..scale))
        .collect();
    Tensor::from_vec(shape, data).expect("sized above")
}

/// Smallest bias shift (scanned outward in steps of `2.5 * margin`) that
/// keeps every `pre + delta` at least `margin` away from zero.
fn clearing_shift(pre: &[f64], margin: f64) -> f64 {
    let step = 2.5 * margin;
    for k in 0..400i64 {
        for sign in [1.0, -1.0] {
            let delta = sign * k as f64 * step;
            if pre.iter().all(|&v| (v + delta).abs() >= margin) {
                return delta;
            }
            if k == 0 {
                break;
            }
        }
    }
    panic!("no kink-clearing bias shift found within +-1 unit");
}

/// Shifts channel biases, front to back, until every ReLU pre-activation
/// on this (input, eps) pair clears `margin`. Later layers are groomed
/// after earlier ones settle, so one pass suffices.
fn groom_relu_margins(model: &mut VaeParams<f64>, x: &Tensor<f64>, eps: &Tensor<f64>, margin: f64) {
    fn groom_channels(pre: &Tensor<f64>, bias: &mut Tensor<f64>, margin: f64) {
        let channels = bias.numel();
        let per = pre.numel() / channels;
        for c in 0..channels {
            let slice = &pre.data()[c * per..(c + 1) * per];
            bias.data_mut()[c] += clearing_shift(slice, margin);
        }
    }

    // Encoder conv ladder.
    let mut h = x.clone();
    for i in 0..model.enc_conv.len() {
        let pre = model.enc_conv[i].forward(&h).expect("groom shapes fixed");
        groom_channels(&pre, &mut model.enc_conv[i].bias.value, margin);
        h = relu(&model.enc_conv[i].forward(&h).expect("groom shapes fixed"));
    }
    let flat = h.reshape(vec![1, model.arch.flat_dim()]).expect("encoder output");
    let mu = model.enc_mu.forward(&flat).expect("groom shapes fixed");
    let logvar = model.enc_logvar.forward(&flat).expect("groom shapes fixed");
    let z_data: Vec<f64> = mu
        .data()
        .iter()
        .zip(logvar.data())
        .zip(eps.data())
        .map(|((&m, &lv), &e)| m + (0.5 * lv).exp() * e)
        .collect();
    let z = Tensor::from_vec(vec![1, LATENT_DIM], z_data).expect("sized above");

    // Decoder: dense bias is per-output, then the deconv ladder (the last
    // deconv feeds a sigmoid, which has no kink).
    {
        let pre = model.dec_dense.forward(&z).expect("groom shapes fixed");
        for (b, &v) in model
            .dec_dense
            .bias
            .value
            .data_mut()
            .iter_mut()
            .zip(pre.data())
        {
            *b += clearing_shift(&[v], margin);
        }
    }
    let side = model.arch.feature_side();
    let ch = *model.arch.channels.last().expect("non-empty ladder");
    let mut h = relu(&model.dec_dense.forward(&z).expect("groom shapes fixed"))
        .reshape(vec![1, ch, side, side])
        .expect("decoder feature block");
    for i in 0..model.dec_conv.len() - 1 {
        let pre = model.dec_conv[i].forward(&h).expect("groom shapes fixed");
        groom_channels(&pre, &mut model.dec_conv[i].bias.value, margin);
        h = relu(&model.dec_conv[i].forward(&h).expect("groom shapes fixed"));
    }
}

fn check_layer(
    name: &str,
    mut layer: LayerKind,
    input_shape: Vec<usize>,
    out_numel: usize,
    use_sigmoid: bool,
    seed: u64,
    cfg: &GradCheckConfig,
) -> GradCheckCase {
    let mut rng = seeds::rng(seed, "gradcheck", 0, 0);
    let input = random_tensor(input_shape, 1.0, &mut rng);
    let projection: Vec<f64> = (0..out_numel).map(|_| rng.gen_range(-1.0..1.0)).collect();
    // Random biases keep ReLU pre-activations off the kink, where
    // central differences are meaningless.
    {
        let bias = match &mut layer {
            LayerKind::Conv(l) => &mut l.bias.value,
            LayerKind::ConvT(l) => &mut l.bias.value,
            LayerKind::Dense(l) => &mut l.bias.value,
        };
        *bias = random_tensor(bias.shape().to_vec(), 0.5, &mut rng);
    }
    let params = match &layer {
        LayerKind::Conv(l) => vec![l.weight.value.clone(), l.bias.value.clone()],
        LayerKind::ConvT(l) => vec![l.weight.value.clone(), l.bias.value.clone()],
        LayerKind::Dense(l) => vec![l.weight.value.clone(), l.bias.value.clone()],
    };
    let fragment = LayerFragment {
        layer: RefCell::new(layer),
        projection,
        use_sigmoid,
    };
    GradCheckCase {
        name: name.to_string(),
        report: grad_check(&fragment, &params, &input, cfg),
    }
}

/// Runs the whole verification suite: randomized shapes for every layer
/// type (conv / transposed conv / dense, each behind ReLU or sigmoid),
/// then the full objective on a random binary image with frozen noise.
///
/// `shapes_per_layer` randomized shapes are drawn per layer type; the
/// defaults of [`GradCheckConfig`] hold every element to 1e-4 relative
/// (1e-6 absolute near zero).
pub fn gradcheck_suite(seed: u64, shapes_per_layer: usize, cfg: &GradCheckConfig) -> Vec<GradCheckCase> {
    let mut cases = Vec::new();
    let mut rng = seeds::rng(seed, "gradcheck-shapes", 0, 0);

    for i in 0..shapes_per_layer {
        let sub = seeds::derive(seed, "gradcheck-case", i as u64, 0);
        // conv with random geometry
        {
            let cin: usize = rng.gen_range(1..4);
            let cout: usize = rng.gen_range(1..4);
            let k: usize = rng.gen_range(1..5);
            let stride: usize = rng.gen_range(1..3);
            let pad: usize = rng.gen_range(0..2);
            let oh: usize = rng.gen_range(1..4);
            let h = (oh - 1) * stride + k;
            if let Some(h) = h.checked_sub(2 * pad).filter(|&h| h > 0) {
                let layer = Conv2d::<f64>::new("conv", cin, cout, k, stride, pad, &mut rng);
                let out = cout * oh * oh;
                cases.push(check_layer(
                    &format!("conv2d[{cin}->{cout} k{k} s{stride} p{pad} in{h}]"),
                    LayerKind::Conv(layer),
                    vec![1, cin, h, h],
                    out,
                    false,
                    sub,
                    cfg,
                ));
            }
        }
        // transposed conv with random geometry
        {
            let cin: usize = rng.gen_range(1..4);
            let cout: usize = rng.gen_range(1..4);
            let k: usize = rng.gen_range(1..5);
            let stride: usize = rng.gen_range(1..3);
            let pad: usize = rng.gen_range(0..k);
            let h: usize = rng.gen_range(1..4);
            if ((h - 1) * stride + k).checked_sub(2 * pad).filter(|&o| o > 0).is_some() {
                let layer = ConvTranspose2d::<f64>::new("deconv", cin, cout, k, stride, pad, &mut rng);
                let oh = (h - 1) * stride + k - 2 * pad;
                cases.push(check_layer(
                    &format!("conv_transpose2d[{cin}->{cout} k{k} s{stride} p{pad} in{h}]"),
                    LayerKind::ConvT(layer),
                    vec![1, cin, h, h],
                    cout * oh * oh,
                    false,
                    sub,
                    cfg,
                ));
            }
        }
        // dense, alternating relu / sigmoid scalarization
        {
            let n = rng.gen_range(1..12);
            let m = rng.gen_range(1..12);
            let layer = Dense::<f64>::new("dense", n, m, &mut rng);
            cases.push(check_layer(
                &format!("dense[{n}->{m}]"),
                LayerKind::Dense(layer),
                vec![1, n],
                m,
                i % 2 == 0,
                sub,
                cfg,
            ));
        }
    }

    // Full objective on a random binary image, frozen eps. The model is
    // nudged to a kink-free point first: finite differences are only
    // meaningful where the h-ball around the evaluation point stays
    // inside one linear region of every ReLU, so channel biases are
    // shifted (by at most ~0.1) until each pre-activation clears a margin
    // far larger than any shift an h-sized parameter step can cause.
    let mut model = VaeParams::<f64>::init(Architecture::default(), seed).expect("standard arch");
    let mut img = RasterImage::zeros("gradcheck");
    for row in 0..64 {
        for col in 0..64 {
            if rng.gen_bool(0.12) {
                img.set(row, col, 1.0);
            }
        }
    }
    let input = image_to_tensor::<f64>(&img);
    let eps_data: Vec<f64> = (0..LATENT_DIM).map(|_| rng.gen_range(-1.5..1.5)).collect();
    let eps = Tensor::from_vec(vec![1, LATENT_DIM], eps_data).expect("sized above");
    groom_relu_margins(&mut model, &input, &eps, 2e-3);
    let names = model.params().iter().map(|p| p.name.clone()).collect();
    let values: Vec<Tensor<f64>> = model.params().iter().map(|p| p.value.clone()).collect();
    let fragment = FullLossFragment {
        model: RefCell::new(model),
        eps,
        names,
    };
    let mut full_cfg = cfg.clone();
    full_cfg.max_elements = cfg.max_elements.max(200).min(240);
    cases.push(GradCheckCase {
        name: "full loss (frozen eps)".into(),
        report: grad_check(&fragment, &values, &input, &full_cfg),
    });
    cases
}
