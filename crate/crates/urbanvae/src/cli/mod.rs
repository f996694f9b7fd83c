//! The `urbanvae` command-line interface.
//!
//! One subcommand per pipeline stage: `synth`, `rasterize`, `split`,
//! `train`, `encode`, `similar`, `cluster`, `elbow`, `tsne`, `generate`,
//! `reconstruct`, `gradcheck`, plus `rerun`, which replays any previous
//! run from its manifest.
//!
//! Reproducibility model: one global `--seed` (falling back to the
//! `URBANVAE_SEED` environment variable, then 42) feeds every derived
//! random stream. Each run writes a run-manifest JSON capturing the
//! effective configuration and SHA-256 digests of inputs and outputs;
//! `rerun --manifest <that file>` reproduces the outputs byte for byte.
//! `--threads` only controls parallelism, never results.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 I/O or corrupt
//! artifact. Diagnostics go to stderr; data only ever goes to files.

mod commands;
mod run_manifest;

pub use run_manifest::{read_run_manifest, RunManifest};

use std::ffi::OsString;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latent::LatentError;
use crate::raster::RasterError;
use crate::vae::VaeError;

/// Seed used when neither `--seed` nor `URBANVAE_SEED` is given.
pub const DEFAULT_SEED: u64 = 42;

#[derive(Error, Debug)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Artifact(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Artifact(_) | CliError::Io(_) => 2,
        }
    }
}

impl From<RasterError> for CliError {
    fn from(e: RasterError) -> Self {
        match e {
            RasterError::Io { .. } => CliError::Io(e.to_string()),
            RasterError::Parse { .. } | RasterError::Config(_) => CliError::Artifact(e.to_string()),
            RasterError::Validation(_) => CliError::Validation(e.to_string()),
        }
    }
}

impl From<VaeError> for CliError {
    fn from(e: VaeError) -> Self {
        match e {
            VaeError::Io { .. } => CliError::Io(e.to_string()),
            VaeError::CorruptCheckpoint { .. } => CliError::Artifact(e.to_string()),
            VaeError::Raster(inner) => inner.into(),
            VaeError::Nn(_) | VaeError::Validation(_) | VaeError::NonFiniteLoss { .. } => {
                CliError::Validation(e.to_string())
            }
        }
    }
}

impl From<LatentError> for CliError {
    fn from(e: LatentError) -> Self {
        match e {
            LatentError::Io { .. } => CliError::Io(e.to_string()),
            LatentError::Format { .. } => CliError::Artifact(e.to_string()),
            LatentError::UnknownId(_) | LatentError::Validation(_) => {
                CliError::Validation(e.to_string())
            }
            LatentError::Vae(inner) => inner.into(),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "urbanvae",
    version,
    about = "Street networks to binary images to a VAE latent space: rasterize, train, analyze, generate."
)]
pub struct Cli {
    /// Global random seed (fallback: URBANVAE_SEED, then 42).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses all cores. Results never depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic geometry corpus (grid / radial / random).
    Synth(SynthArgs),
    /// Rasterize geometry files into 64x64 binary PGMs plus a manifest.
    Rasterize(RasterizeArgs),
    /// Assign train/test split tags to a corpus manifest.
    Split(SplitArgs),
    /// Train the VAE on a split corpus and write a checkpoint.
    Train(TrainArgs),
    /// Encode corpus images into urban network vectors (CSV).
    Encode(EncodeArgs),
    /// Rank the nearest neighbors of a query city.
    Similar(SimilarArgs),
    /// K-means clustering of urban network vectors.
    Cluster(ClusterArgs),
    /// WCSS-vs-K curve with an elbow suggestion.
    Elbow(ElbowArgs),
    /// Project vectors to 2-D with exact t-SNE.
    Tsne(TsneArgs),
    /// Sample latent codes from the prior and decode them.
    Generate(GenerateArgs),
    /// Originals-over-reconstructions composite image.
    Reconstruct(ReconstructArgs),
    /// Finite-difference verification of all gradients.
    Gradcheck(GradcheckArgs),
    /// Replay a previous run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SynthArgs {
    /// Directory for the generated geometry JSON files.
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
    /// Number of cities.
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    /// Comma-separated classes, assigned round-robin.
    #[arg(long, default_value = "grid,radial,random", value_delimiter = ',')]
    pub classes: Vec<String>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct RasterizeArgs {
    /// Directory of geometry JSON files (every *.json, sorted by name).
    #[arg(long)]
    pub input_dir: std::path::PathBuf,
    /// Directory for PGMs and the corpus manifest.
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
    /// Window side in meters.
    #[arg(long, default_value_t = 3000.0)]
    pub window_m: f64,
    /// Output resolution; only 64 is supported.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SplitArgs {
    /// Corpus manifest to read.
    #[arg(long)]
    pub manifest: std::path::PathBuf,
    /// Where to write the manifest with split tags (must differ).
    #[arg(long)]
    pub out: std::path::PathBuf,
    /// Training fraction.
    #[arg(long, default_value_t = 0.8)]
    pub ratio: f64,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct TrainArgs {
    /// Split-tagged corpus manifest.
    #[arg(long)]
    pub manifest: std::path::PathBuf,
    /// Directory for checkpoint, history.csv, and the run manifest.
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Disable crop/flip augmentation of training samples.
    #[arg(long, default_value_t = false)]
    pub no_augment: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitFilter {
    All,
    Train,
    Test,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct EncodeArgs {
    /// Checkpoint directory.
    #[arg(long)]
    pub checkpoint: std::path::PathBuf,
    /// Corpus manifest naming the images to encode.
    #[arg(long)]
    pub manifest: std::path::PathBuf,
    /// Which split to encode.
    #[arg(long, value_enum, default_value_t = SplitFilter::All)]
    pub split: SplitFilter,
    /// Output vectors CSV.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct SimilarArgs {
    /// Vectors CSV from `encode`.
    #[arg(long)]
    pub vectors: std::path::PathBuf,
    /// Query city id.
    #[arg(long)]
    pub query: String,
    /// Number of neighbors.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Output ranking CSV.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct ClusterArgs {
    /// Vectors CSV from `encode`.
    #[arg(long)]
    pub vectors: std::path::PathBuf,
    /// Number of clusters.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Output assignments CSV (city_id,cluster).
    #[arg(long)]
    pub out_csv: std::path::PathBuf,
    /// Output summary JSON (K, wcss, centroids).
    #[arg(long)]
    pub out_json: std::path::PathBuf,
    /// Corpus manifest; enables the lon/lat map export.
    #[arg(long)]
    pub manifest: Option<std::path::PathBuf>,
    /// Output map CSV (city_id,lon,lat,cluster); needs --manifest.
    #[arg(long)]
    pub map_out: Option<std::path::PathBuf>,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct ElbowArgs {
    /// Vectors CSV from `encode`.
    #[arg(long)]
    pub vectors: std::path::PathBuf,
    /// Largest K to evaluate.
    #[arg(long, default_value_t = 10)]
    pub k_max: usize,
    /// Output curve CSV (K,wcss).
    #[arg(long)]
    pub out_csv: std::path::PathBuf,
    /// Output suggestion JSON.
    #[arg(long)]
    pub out_json: std::path::PathBuf,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct TsneArgs {
    /// Vectors CSV from `encode`.
    #[arg(long)]
    pub vectors: std::path::PathBuf,
    #[arg(long, default_value_t = 30.0)]
    pub perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    /// Output embedding CSV (city_id,x,y).
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct GenerateArgs {
    /// Checkpoint directory.
    #[arg(long)]
    pub checkpoint: std::path::PathBuf,
    /// Number of prior samples to decode.
    #[arg(long, default_value_t = 16)]
    pub count: usize,
    /// Binarize exports at this threshold instead of grayscale.
    #[arg(long)]
    pub threshold: Option<f32>,
    /// Directory for sample PGMs and the JSON sidecar.
    #[arg(long)]
    pub out_dir: std::path::PathBuf,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct ReconstructArgs {
    /// Checkpoint directory.
    #[arg(long)]
    pub checkpoint: std::path::PathBuf,
    /// Corpus manifest naming the images.
    #[arg(long)]
    pub manifest: std::path::PathBuf,
    /// Comma-separated city ids; defaults to the first --count test images.
    #[arg(long, value_delimiter = ',')]
    pub ids: Option<Vec<String>>,
    /// How many images when --ids is not given (max 16).
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    /// Output composite PGM.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct GradcheckArgs {
    /// Random shapes per layer type.
    #[arg(long, default_value_t = 20)]
    pub shapes: usize,
    /// Output report JSON.
    #[arg(long, default_value = "gradcheck_report.json")]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug, Serialize, Deserialize)]
pub struct RerunArgs {
    /// Run manifest written by a previous invocation.
    #[arg(long)]
    pub manifest: std::path::PathBuf,
}

/// Parses `argv` and executes; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init();

    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            eprint!("{e}");
            return code;
        }
    };

    if cli.threads > 0 {
        // The global pool can only be installed once per process; a
        // second configuration attempt is harmless because results do
        // not depend on the pool size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global();
    }

    let seed = cli
        .seed
        .or_else(|| {
            std::env::var("URBANVAE_SEED")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(DEFAULT_SEED);

    match commands::dispatch(cli.command, seed) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
