//! Urban network vectors: encoding, distance, retrieval, CSV I/O.

use std::path::Path;

use super::LatentError;
use crate::raster::RasterImage;
use crate::vae::{images_to_tensor, VaeParams};
use crate::LATENT_DIM;

/// The 32-dimensional latent descriptor of one city.
#[derive(Clone, Debug, PartialEq)]
pub struct UrbanNetworkVector {
    pub city_id: String,
    values: Vec<f32>,
}

impl UrbanNetworkVector {
    pub fn new(city_id: impl Into<String>, values: Vec<f32>) -> Result<Self, LatentError> {
        if values.len() != LATENT_DIM {
            return Err(LatentError::Validation(format!(
                "urban network vectors have {LATENT_DIM} dimensions, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(LatentError::Validation(format!(
                "non-finite component {bad}"
            )));
        }
        Ok(Self {
            city_id: city_id.into(),
            values,
        })
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }
}

/// Euclidean distance between two vectors (accumulated in `f64`).
pub fn distance(p: &UrbanNetworkVector, q: &UrbanNetworkVector) -> f64 {
    p.values
        .iter()
        .zip(&q.values)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Encodes images to their posterior means, order preserved.
///
/// The deterministic mean is used rather than a sampled `z`, so repeated
/// encodings and the retrieval built on them are stable.
pub fn encode_corpus(
    params: &VaeParams<f32>,
    images: &[RasterImage],
) -> Result<Vec<UrbanNetworkVector>, LatentError> {
    let mut out = Vec::with_capacity(images.len());
    for chunk in images.chunks(16) {
        let refs: Vec<&RasterImage> = chunk.iter().collect();
        let x = images_to_tensor::<f32>(&refs);
        let (mu, _) = params.encode_batch(&x)?;
        for (i, img) in chunk.iter().enumerate() {
            out.push(UrbanNetworkVector::new(
                img.city_id.clone(),
                mu.data()[i * LATENT_DIM..(i + 1) * LATENT_DIM].to_vec(),
            )?);
        }
    }
    Ok(out)
}

/// The `k` nearest vectors to `query` by Euclidean distance, ascending,
/// the query itself excluded. Ties break by city id.
pub fn nearest_neighbors(
    query: &str,
    k: usize,
    vectors: &[UrbanNetworkVector],
) -> Result<Vec<(String, f64)>, LatentError> {
    let query_vec = vectors
        .iter()
        .find(|v| v.city_id == query)
        .ok_or_else(|| LatentError::UnknownId(query.to_string()))?;
    if k >= vectors.len() {
        return Err(LatentError::Validation(format!(
            "k = {k} must be smaller than the corpus size {}",
            vectors.len()
        )));
    }
    let mut ranked: Vec<(String, f64)> = vectors
        .iter()
        .filter(|v| v.city_id != query)
        .map(|v| (v.city_id.clone(), distance(query_vec, v)))
        .collect();
    ranked.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);
    Ok(ranked)
}

/// Mean pixel intensity: the paper-style proxy for street density.
pub fn density_proxy(img: &RasterImage) -> f64 {
    img.mean()
}

/// Writes `city_id,v0,...,v31` rows.
pub fn write_vectors_csv(
    path: &Path,
    vectors: &[UrbanNetworkVector],
) -> Result<(), LatentError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| LatentError::Format {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    let mut header = vec!["city_id".to_string()];
    header.extend((0..LATENT_DIM).map(|i| format!("v{i}")));
    let fail = |e: csv::Error| LatentError::Format {
        path: path.to_path_buf(),
        detail: e.to_string(),
    };
    w.write_record(&header).map_err(fail)?;
    for v in vectors {
        let mut record = vec![v.city_id.clone()];
        record.extend(v.values.iter().map(|x| x.to_string()));
        w.write_record(&record).map_err(fail)?;
    }
    w.flush().map_err(|e| LatentError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

pub fn read_vectors_csv(path: &Path) -> Result<Vec<UrbanNetworkVector>, LatentError> {
    let fail = |detail: String| LatentError::Format {
        path: path.to_path_buf(),
        detail,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(|e| fail(e.to_string()))?;
        if record.len() != LATENT_DIM + 1 {
            return Err(fail(format!(
                "row {}: expected {} columns, got {}",
                i + 2,
                LATENT_DIM + 1,
                record.len()
            )));
        }
        let values: Vec<f32> = record
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<f32>()
                    .map_err(|e| fail(format!("row {}: {e} ({s:?})", i + 2)))
            })
            .collect::<Result<_, _>>()?;
        out.push(UrbanNetworkVector::new(record[0].to_string(), values)?);
    }
    Ok(out)
}
