//! Run manifests: the effective configuration and artifact digests of
//! one CLI invocation, sufficient to replay it byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::CliError;

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub seed: u64,
    /// The subcommand's arguments with every default materialized.
    pub args: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Small command-specific metrics (final losses, suggested K, ...).
    #[serde(default)]
    pub result: Value,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.to_string_lossy().into_owned(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// Writes the run manifest for a finished command.
pub fn write_run_manifest(
    path: &Path,
    subcommand: &str,
    seed: u64,
    args: Value,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    result: Value,
) -> Result<(), CliError> {
    let manifest = RunManifest {
        tool: "urbanvae".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: subcommand.into(),
        seed,
        args,
        inputs: digests(inputs)?,
        outputs: digests(outputs)?,
        result,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn read_run_manifest(path: &Path) -> Result<RunManifest, CliError> {
    let bytes =
        fs::read(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Artifact(format!("{}: {e}", path.display())))
}
