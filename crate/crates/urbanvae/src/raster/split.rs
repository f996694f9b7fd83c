//! Deterministic train/test split.

use std::collections::HashSet;

use rand::seq::SliceRandom;

use super::{DatasetSplit, RasterError};
use crate::seeds;

/// Shuffles `ids` deterministically by `seed` and puts the first
/// `floor(ratio * N)` into the training set, the rest into test.
pub fn split_dataset(ids: &[String], ratio: f64, seed: u64) -> Result<DatasetSplit, RasterError> {
    if ids.is_empty() {
        return Err(RasterError::Validation("cannot split an empty id list".into()));
    }
    if !(0.0..=1.0).contains(&ratio) {
        return Err(RasterError::Validation(format!(
            "split ratio must lie in [0, 1], got {ratio}"
        )));
    }
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(RasterError::Validation(format!("duplicate city id {id:?}")));
        }
    }

    let mut shuffled: Vec<String> = ids.to_vec();
    shuffled.shuffle(&mut seeds::rng(seed, "split", 0, 0));
    let train_n = (ratio * ids.len() as f64).floor() as usize;
    let test_ids = shuffled.split_off(train_n);
    Ok(DatasetSplit {
        train_ids: shuffled,
        test_ids,
        seed,
    })
}
