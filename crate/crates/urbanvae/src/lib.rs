//! Street-network imaging and latent-space analysis with a convolutional VAE.
//!
//! `urbanvae` turns vector street geometry into a fixed-scale corpus of
//! 64x64 binary images, trains a convolutional variational autoencoder on
//! that corpus, and uses the learned 32-dimensional codes ("urban network
//! vectors") for similarity search, clustering, 2-D projection, and
//! synthesis of new street-network images.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`raster`]: geometry ingestion, window cropping, supercover
//!   rasterization, augmentation, train/test splitting, PGM + manifest I/O.
//! - [`nn`]: a small differentiable-layer engine (conv, transposed conv,
//!   dense, ReLU, sigmoid, Adam) with a finite-difference gradient checker.
//! - [`vae`]: the encoder/decoder model, the ELBO loss, the training loop,
//!   and checkpoint I/O.
//! - [`latent`]: Euclidean similarity, nearest-neighbor retrieval, K-means
//!   with the elbow heuristic, exact t-SNE, and the pixel-density proxy.
//! - [`generate`]: prior sampling, decoding, and composite image grids.
//! - [`synth`]: procedural street patterns (grid / radial / random) so the
//!   whole pipeline runs without external data.
//! - [`cli`]: the `urbanvae` binary's subcommands with run manifests for
//!   reproducibility.
//!
//! Everything is deterministic given a seed: random streams are derived
//! per purpose (and per city) from the global seed, and parallel sections
//! reduce in a fixed order, so results do not depend on thread count.
//!
//! See the crate `examples/` directory for one runnable example per
//! capability, and the `urbanvae` binary for the file-based pipeline.

pub mod cli;
pub mod generate;
pub mod latent;
pub mod nn;
pub mod raster;
pub mod seeds;
pub mod synth;
pub mod vae;

pub use latent::UrbanNetworkVector;
pub use raster::{RasterImage, StreetNetwork, Window, RESOLUTION};
pub use vae::{TrainConfig, VaeParams, LATENT_DIM};
