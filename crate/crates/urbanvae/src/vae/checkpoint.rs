//! Checkpoint directory I/O.
//!
//! A checkpoint is a directory holding `manifest.json` (format version,
//! architecture descriptor, ordered tensor records, and a SHA-256 digest
//! of the blob) plus `params.bin`: all tensors as little-endian `f32`,
//! concatenated in manifest order. Round trips are bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::{Architecture, VaeParams};
use super::VaeError;
use crate::nn::Tensor;

const FORMAT_VERSION: u32 = 1;
const MANIFEST: &str = "manifest.json";
const BLOB: &str = "params.bin";

#[derive(Serialize, Deserialize, Clone, Debug)]
struct TensorRecord {
    name: String,
    shape: Vec<usize>,
    dtype: String,
    byte_offset: usize,
    byte_len: usize,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
struct CheckpointManifest {
    format_version: u32,
    architecture: Architecture,
    tensors: Vec<TensorRecord>,
    blob_sha256: String,
}

/// Writes `manifest.json` + `params.bin` into `dir` (created if absent).
pub fn save_checkpoint(params: &VaeParams<f32>, dir: &Path) -> Result<(), VaeError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| VaeError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let mut blob: Vec<u8> = Vec::new();
    let mut records = Vec::new();
    for p in params.params() {
        let byte_offset = blob.len();
        for v in p.value.data() {
            blob.extend_from_slice(&v.to_le_bytes());
        }
        records.push(TensorRecord {
            name: p.name.clone(),
            shape: p.value.shape().to_vec(),
            dtype: "f32".into(),
            byte_offset,
            byte_len: blob.len() - byte_offset,
        });
    }
    let manifest = CheckpointManifest {
        format_version: FORMAT_VERSION,
        architecture: params.arch.clone(),
        tensors: records,
        blob_sha256: hex::encode(Sha256::digest(&blob)),
    };

    let blob_path = dir.join(BLOB);
    fs::write(&blob_path, &blob).map_err(io_err(&blob_path))?;
    let manifest_path = dir.join(MANIFEST);
    let mut json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    json.push(b'\n');
    fs::write(&manifest_path, json).map_err(io_err(&manifest_path))
}

/// Loads and validates a checkpoint directory.
///
/// Any disagreement between manifest and blob (tensor count, shapes,
/// offsets, digest) is a corrupt-checkpoint error.
pub fn load_checkpoint(dir: &Path) -> Result<VaeParams<f32>, VaeError> {
    let corrupt = |detail: String| VaeError::CorruptCheckpoint {
        path: dir.to_path_buf(),
        detail,
    };
    let manifest_path = dir.join(MANIFEST);
    let manifest_bytes = fs::read(&manifest_path).map_err(|source| VaeError::Io {
        path: manifest_path.clone(),
        source,
    })?;
    let manifest: CheckpointManifest =
        serde_json::from_slice(&manifest_bytes).map_err(|e| corrupt(format!("manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(corrupt(format!(
            "unsupported format_version {}",
            manifest.format_version
        )));
    }
    manifest.architecture.validate()?;

    let blob_path = dir.join(BLOB);
    let blob = fs::read(&blob_path).map_err(|source| VaeError::Io {
        path: blob_path,
        source,
    })?;
    if hex::encode(Sha256::digest(&blob)) != manifest.blob_sha256 {
        return Err(corrupt("blob digest does not match manifest".into()));
    }

    let mut params = VaeParams::<f32>::init(manifest.architecture.clone(), 0)?;
    {
        let expected = params.params();
        if expected.len() != manifest.tensors.len() {
            return Err(corrupt(format!(
                "expected {} tensors, manifest lists {}",
                expected.len(),
                manifest.tensors.len()
            )));
        }
        let mut offset = 0usize;
        for (want, record) in expected.iter().zip(&manifest.tensors) {
            if record.name != want.name {
                return Err(corrupt(format!(
                    "tensor {:?} out of place (expected {:?})",
                    record.name, want.name
                )));
            }
            if record.dtype != "f32" {
                return Err(corrupt(format!(
                    "{}: unsupported dtype {:?}",
                    record.name, record.dtype
                )));
            }
            if record.shape != want.value.shape() {
                return Err(corrupt(format!(
                    "{}: shape {:?} does not match architecture ({:?})",
                    record.name,
                    record.shape,
                    want.value.shape()
                )));
            }
            if record.byte_offset != offset || record.byte_len != want.value.numel() * 4 {
                return Err(corrupt(format!("{}: bad offset or length", record.name)));
            }
            offset += record.byte_len;
        }
        if blob.len() != offset {
            return Err(corrupt(format!(
                "blob holds {} bytes, manifest describes {offset}",
                blob.len()
            )));
        }
    }

    let mut values = Vec::with_capacity(manifest.tensors.len());
    for record in &manifest.tensors {
        let bytes = &blob[record.byte_offset..record.byte_offset + record.byte_len];
        let data: Vec<f32> = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("chunks of 4")))
            .collect();
        values.push(
            Tensor::from_vec(record.shape.clone(), data)
                .map_err(|e| corrupt(format!("{}: {e}", record.name)))?,
        );
    }
    params.set_param_values(&values);
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip_params() -> VaeParams<f32> {
        VaeParams::<f32>::init(Architecture::default(), 7).unwrap()
    }

    #[test]
    fn save_load_roundtrip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let params = roundtrip_params();
        save_checkpoint(&params, dir.path()).unwrap();
        let back = load_checkpoint(dir.path()).unwrap();
        for (a, b) in params.params().iter().zip(back.params()) {
            assert_eq!(a.name, b.name);
            assert_eq!(a.value, b.value);
        }
    }

    #[test]
    fn truncated_blob_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&roundtrip_params(), dir.path()).unwrap();
        let blob_path = dir.path().join(BLOB);
        let blob = fs::read(&blob_path).unwrap();
        fs::write(&blob_path, &blob[..blob.len() - 4]).unwrap();
        let err = load_checkpoint(dir.path()).unwrap_err();
        assert!(matches!(err, VaeError::CorruptCheckpoint { .. }), "{err}");
    }

    #[test]
    fn wrong_shape_in_manifest_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&roundtrip_params(), dir.path()).unwrap();
        let manifest_path = dir.path().join(MANIFEST);
        let mut doc: serde_json::Value =
            serde_json::from_slice(&fs::read(&manifest_path).unwrap()).unwrap();
        doc["tensors"][0]["shape"][0] = serde_json::json!(16);
        fs::write(&manifest_path, serde_json::to_vec(&doc).unwrap()).unwrap();
        let err = load_checkpoint(dir.path()).unwrap_err();
        assert!(matches!(err, VaeError::CorruptCheckpoint { .. }), "{err}");
        assert!(err.to_string().contains("shape"), "{err}");
    }

    #[test]
    fn tampered_bytes_fail_the_digest() {
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&roundtrip_params(), dir.path()).unwrap();
        let blob_path = dir.path().join(BLOB);
        let mut blob = fs::read(&blob_path).unwrap();
        blob[100] ^= 0xff;
        fs::write(&blob_path, blob).unwrap();
        let err = load_checkpoint(dir.path()).unwrap_err();
        assert!(err.to_string().contains("digest"), "{err}");
    }
}
