//! Mini-batch Adam training over shuffled epochs.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checkpoint::save_checkpoint;
use super::model::{images_to_tensor, Architecture, VaeParams};
use super::VaeError;
use crate::nn::{AdamState, Tensor};
use crate::raster::{augment, RasterImage};
use crate::seeds;
use crate::LATENT_DIM;

/// Samples processed per gradient work unit.
///
/// The batch is cut into fixed chunks; chunk gradients are summed in
/// chunk order, so results are bit-identical for any thread count.
const CHUNK: usize = 8;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub learning_rate: f64,
    /// Random crop + flip on training samples, re-drawn each epoch.
    pub augment: bool,
    /// Where to write the final checkpoint, if anywhere.
    pub checkpoint_dir: Option<PathBuf>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 32,
            seed: 42,
            learning_rate: 1e-3,
            augment: true,
            checkpoint_dir: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), VaeError> {
        if self.epochs < 1 {
            return Err(VaeError::Validation("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(VaeError::Validation("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return Err(VaeError::Validation(format!(
                "learning rate must be finite and >= 0, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Per-epoch mean losses (per image).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_total: f64,
    pub train_recon: f64,
    pub train_kl: f64,
    pub test_total: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    /// CSV with header `epoch,train_total,train_recon,train_kl,test_total`.
    pub fn write_csv(&self, path: &Path) -> Result<(), VaeError> {
        let mut buf = String::from("epoch,train_total,train_recon,train_kl,test_total\n");
        for e in &self.epochs {
            buf.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.train_total, e.train_recon, e.train_kl, e.test_total
            ));
        }
        let mut f = fs::File::create(path).map_err(|source| VaeError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        f.write_all(buf.as_bytes()).map_err(|source| VaeError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Draws the frozen per-city noise vector for the single-sample Monte
/// Carlo estimate. Keyed by city id only, so histories are flat when the
/// learning rate is zero and results do not depend on sample order.
fn eps_for_city(seed: u64, city_id: &str) -> Vec<f32> {
    let mut rng = seeds::rng_keyed(seed, "eps", city_id, 0);
    (0..LATENT_DIM).map(|_| rng.sample(StandardNormal)).collect()
}

/// Trains a fresh VAE on `train_images`, reporting held-out loss on
/// `test_images` after every epoch.
///
/// Deterministic given `config.seed`: shuffling, augmentation, noise, and
/// initialization all derive from it, and gradient reduction order is
/// fixed, so reruns (with any thread count) reproduce the same bits.
pub fn train(
    train_images: &[RasterImage],
    test_images: &[RasterImage],
    config: &TrainConfig,
) -> Result<(VaeParams<f32>, TrainHistory), VaeError> {
    config.validate()?;
    if train_images.len() < 2 {
        return Err(VaeError::Validation(format!(
            "need at least 2 training images, got {}",
            train_images.len()
        )));
    }

    let mut params = VaeParams::<f32>::init(Architecture::default(), config.seed)?;
    let mut adam = AdamState::new(config.learning_rate as f32);
    let mut history = TrainHistory::default();

    let test_eps: Vec<Vec<f32>> = test_images
        .iter()
        .map(|img| eps_for_city(config.seed, &img.city_id))
        .collect();

    for epoch in 0..config.epochs {
        let mut order: Vec<usize> = (0..train_images.len()).collect();
        order.shuffle(&mut seeds::rng(config.seed, "shuffle", epoch as u64, 0));

        let mut sum_total = 0.0;
        let mut sum_recon = 0.0;
        let mut sum_kl = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            // Materialize the (augmented) samples and their noise.
            let samples: Vec<(RasterImage, Vec<f32>)> = batch
                .iter()
                .map(|&i| {
                    let img = &train_images[i];
                    let x = if config.augment {
                        let mut rng =
                            seeds::rng_keyed(config.seed, "augment", &img.city_id, epoch as u64);
                        augment(img, &mut rng)
                    } else {
                        img.clone()
                    };
                    (x, eps_for_city(config.seed, &img.city_id))
                })
                .collect();

            let grad_scale = 1.0 / batch.len() as f64;
            let chunks: Vec<&[(RasterImage, Vec<f32>)]> = samples.chunks(CHUNK).collect();
            let results: Vec<Result<(VaeParams<f32>, super::model::BatchLoss), VaeError>> = chunks
                .par_iter()
                .map(|chunk| {
                    let imgs: Vec<&RasterImage> = chunk.iter().map(|(img, _)| img).collect();
                    let x = images_to_tensor::<f32>(&imgs);
                    let eps_data: Vec<f32> =
                        chunk.iter().flat_map(|(_, e)| e.iter().copied()).collect();
                    let eps = Tensor::from_vec(vec![chunk.len(), LATENT_DIM], eps_data)
                        .expect("sized by chunk");
                    let mut worker = params.clone();
                    let (loss, _) = worker.loss_and_gradients(&x, &eps, grad_scale, false)?;
                    Ok((worker, loss))
                })
                .collect();

            // Fixed-order reduction: chunk gradients (each already scaled
            // by 1 / batch size) sum to the batch-mean gradient.
            let mut batch_total = 0.0;
            for result in results {
                let (worker, loss) = result?;
                params.absorb_grads(&worker);
                for s in &loss.per_sample {
                    sum_total += s.total;
                    sum_recon += s.recon;
                    sum_kl += s.kl;
                    batch_total += s.total;
                }
            }
            if !batch_total.is_finite() {
                return Err(VaeError::NonFiniteLoss {
                    epoch,
                    batch: batch_idx,
                });
            }
            adam.step(params.params_mut())?;
        }

        let n_train = train_images.len() as f64;
        let test_total = evaluate(&params, test_images, &test_eps)?;
        history.epochs.push(EpochStats {
            epoch,
            train_total: sum_total / n_train,
            train_recon: sum_recon / n_train,
            train_kl: sum_kl / n_train,
            test_total,
        });
    }

    if let Some(dir) = &config.checkpoint_dir {
        save_checkpoint(&params, dir)?;
    }
    Ok((params, history))
}

/// Mean per-image loss over a held-out set with frozen noise.
fn evaluate(
    params: &VaeParams<f32>,
    images: &[RasterImage],
    eps: &[Vec<f32>],
) -> Result<f64, VaeError> {
    if images.is_empty() {
        return Ok(f64::NAN);
    }
    let mut sum = 0.0;
    for chunk_ids in (0..images.len()).collect::<Vec<_>>().chunks(CHUNK) {
        let imgs: Vec<&RasterImage> = chunk_ids.iter().map(|&i| &images[i]).collect();
        let x = images_to_tensor::<f32>(&imgs);
        let eps_data: Vec<f32> = chunk_ids
            .iter()
            .flat_map(|&i| eps[i].iter().copied())
            .collect();
        let eps_t =
            Tensor::from_vec(vec![chunk_ids.len(), LATENT_DIM], eps_data).expect("sized above");
        let loss = params.batch_loss(&x, &eps_t)?;
        sum += loss.per_sample.iter().map(|s| s.total).sum::<f64>();
    }
    Ok(sum / images.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::RESOLUTION;

    fn tiny_corpus(n: usize, seed: u64) -> Vec<RasterImage> {
        (0..n)
            .map(|i| {
                let mut rng = seeds::rng(seed, "train-test-corpus", i as u64, 0);
                let mut img = RasterImage::zeros(format!("c{i:03}"));
                for row in 0..RESOLUTION {
                    for col in 0..RESOLUTION {
                        if rng.gen_bool(0.15) {
                            img.set(row, col, 1.0);
                        }
                    }
                }
                img
            })
            .collect()
    }

    fn quick_config(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 8,
            seed: 11,
            learning_rate: 1e-3,
            augment: true,
            checkpoint_dir: None,
        }
    }

    #[test]
    fn two_epoch_rerun_reproduces_history_and_checkpoint_bytes() {
        let corpus = tiny_corpus(16, 1);
        let (train_set, test_set) = corpus.split_at(12);
        let cfg = quick_config(2);
        let (params_a, hist_a) = train(train_set, test_set, &cfg).unwrap();
        let (params_b, hist_b) = train(train_set, test_set, &cfg).unwrap();
        assert_eq!(hist_a, hist_b);

        let dir = tempfile::tempdir().unwrap();
        let (pa, pb) = (dir.path().join("a"), dir.path().join("b"));
        super::save_checkpoint(&params_a, &pa).unwrap();
        super::save_checkpoint(&params_b, &pb).unwrap();
        assert_eq!(
            fs::read(pa.join("params.bin")).unwrap(),
            fs::read(pb.join("params.bin")).unwrap()
        );
    }

    #[test]
    fn zero_learning_rate_changes_nothing_and_history_is_flat() {
        let corpus = tiny_corpus(8, 2);
        let (train_set, test_set) = corpus.split_at(6);
        let cfg = TrainConfig {
            epochs: 3,
            learning_rate: 0.0,
            augment: false,
            ..quick_config(3)
        };
        let (params, hist) = train(train_set, test_set, &cfg).unwrap();
        let fresh = VaeParams::<f32>::init(Architecture::default(), cfg.seed).unwrap();
        for (a, b) in params.params().iter().zip(fresh.params()) {
            assert_eq!(a.value, b.value, "{} moved", a.name);
        }
        for e in &hist.epochs[1..] {
            assert_eq!(e.train_total, hist.epochs[0].train_total);
            assert_eq!(e.test_total, hist.epochs[0].test_total);
        }
    }

    #[test]
    fn loss_decreases_on_a_small_corpus() {
        let corpus = tiny_corpus(24, 3);
        let (train_set, test_set) = corpus.split_at(20);
        let (_, hist) = train(train_set, test_set, &quick_config(6)).unwrap();
        let first = hist.epochs.first().unwrap().train_total;
        let last = hist.epochs.last().unwrap().train_total;
        assert!(last < first, "no progress: {first} -> {last}");
        assert_eq!(hist.epochs.len(), 6);
        assert!(hist.epochs.iter().all(|e| e.train_kl >= 0.0));
    }

    #[test]
    fn exploding_run_aborts_with_epoch_and_batch() {
        let corpus = tiny_corpus(4, 4);
        let cfg = TrainConfig {
            learning_rate: 1e12,
            augment: false,
            ..quick_config(4)
        };
        let err = train(&corpus, &[], &cfg).unwrap_err();
        match err {
            VaeError::NonFiniteLoss { .. } => {}
            other => panic!("expected NonFiniteLoss, got {other}"),
        }
    }

    #[test]
    fn config_validation_rejects_zero_epochs() {
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        assert!(cfg.validate().is_err());
        let corpus = tiny_corpus(2, 5);
        assert!(train(&corpus[..1], &[], &quick_config(1)).is_err());
    }
}
