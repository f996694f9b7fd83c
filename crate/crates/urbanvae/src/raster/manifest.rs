//! Corpus manifest: one record per rasterized city.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::RasterError;

/// Split membership recorded in the manifest.
#[derive(Serialize, Deserialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

/// One corpus entry; `file` is relative to the manifest's directory.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub city_id: String,
    pub file: String,
    pub origin_lonlat: Option<(f64, f64)>,
    pub split: Option<SplitTag>,
}

/// Writes the manifest as a JSON array, pretty-printed for diffability.
pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<(), RasterError> {
    let io_err = |source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut json = serde_json::to_vec_pretty(entries).expect("manifest entries serialize");
    json.push(b'\n');
    fs::write(path, json).map_err(io_err)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, RasterError> {
    let bytes = fs::read(path).map_err(|source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|e| RasterError::Parse {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let entries = vec![
            ManifestEntry {
                city_id: "a".into(),
                file: "a.pgm".into(),
                origin_lonlat: Some((-9.14, 38.71)),
                split: Some(SplitTag::Train),
            },
            ManifestEntry {
                city_id: "b".into(),
                file: "b.pgm".into(),
                origin_lonlat: None,
                split: None,
            },
        ];
        write_manifest(&path, &entries).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), entries);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"split\": \"train\""), "{text}");
    }
}
