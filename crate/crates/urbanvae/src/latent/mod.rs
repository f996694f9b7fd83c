//! Analysis in the learned latent space.
//!
//! Trained-encoder means of images become "urban network vectors":
//! 32-dimensional descriptors compared with plain Euclidean distance.
//! On top of that sit nearest-neighbor retrieval, K-means clustering
//! (k-means++ init, best of restarts) with an elbow-method suggestion,
//! an exact t-SNE projection to 2-D, and the mean-pixel density proxy.

mod kmeans;
mod tsne;
mod vectors;

pub use kmeans::{elbow_curve, kmeans, ClusterModel, ElbowCurve};
pub use tsne::{calibrated_probabilities, tsne, CalibratedP, Embedding2D, TsneConfig, TsneRun};
pub use vectors::{
    density_proxy, distance, encode_corpus, nearest_neighbors, read_vectors_csv,
    write_vectors_csv, UrbanNetworkVector,
};

use std::path::PathBuf;
use thiserror::Error;

use crate::vae::VaeError;

#[derive(Error, Debug)]
pub enum LatentError {
    #[error("unknown city id {0:?}")]
    UnknownId(String),
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {detail}")]
    Format { path: PathBuf, detail: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Vae(#[from] VaeError),
}
