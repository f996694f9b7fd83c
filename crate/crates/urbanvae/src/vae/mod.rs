//! The convolutional variational autoencoder.
//!
//! Encoder: four stride-2 conv+ReLU blocks (1 -> 32 -> 64 -> 128 -> 256
//! channels, kernel 4, pad 1) take a 64x64 image down to 256x4x4, then two
//! dense heads produce the 32-dimensional posterior mean and log-variance.
//! The decoder mirrors it: dense 32 -> 4096, ReLU, reshape to 256x4x4,
//! four transposed-conv blocks (256 -> 128 -> 64 -> 32 -> 1) with ReLU
//! between and a sigmoid last, emitting per-pixel Bernoulli probabilities.
//!
//! Training minimizes reconstruction negative log-likelihood plus the
//! KL divergence of the diagonal-Gaussian posterior from the standard
//! normal prior, estimated with a single noise sample per datapoint and
//! optimized with Adam.

mod checkpoint;
mod gradcheck_suite;
mod loss;
mod model;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use gradcheck_suite::{gradcheck_suite, GradCheckCase};
pub use loss::{kl_term, loss_terms, reconstruction_nll, LossTerms, LOGVAR_CLAMP, PROB_EPS};
pub use model::{
    image_to_tensor, images_to_tensor, reparameterize, tensor_to_images, Architecture, BatchLoss,
    LatentCode, LossSample, VaeParams,
};
pub use train::{train, EpochStats, TrainConfig, TrainHistory};

use std::path::PathBuf;
use thiserror::Error;

use crate::nn::NnError;
use crate::raster::RasterError;

/// Size of the latent space.
pub const LATENT_DIM: usize = 32;

#[derive(Error, Debug)]
pub enum VaeError {
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupt checkpoint at {path}: {detail}")]
    CorruptCheckpoint { path: PathBuf, detail: String },
}
