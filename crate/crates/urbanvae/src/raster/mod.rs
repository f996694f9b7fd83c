//! From street geometry to a fixed-scale binary image corpus.
//!
//! A city enters as a set of polyline segments in a local planar frame
//! (meters). A square window (3 km by default) centered on the city is
//! cropped out with Liang-Barsky clipping, rasterized onto a 64x64 grid
//! with a supercover rule (a pixel lights up iff a segment intersects its
//! closed cell, so thin roads never drop out between pixel centers), and
//! written as a P5 PGM plus a corpus manifest. Training-time augmentation
//! and the deterministic train/test split live here too.

mod augment;
mod clip;
mod load;
mod manifest;
mod pgm;
mod rasterize;
mod split;

pub use augment::{augment, augment_with, PAD};
pub use clip::{clip_segment, crop_window};
pub use load::load_street_geometry;
pub use manifest::{read_manifest, write_manifest, ManifestEntry, SplitTag};
pub use pgm::GrayImage;
pub use rasterize::rasterize;
pub use split::split_dataset;

use std::path::PathBuf;
use thiserror::Error;

/// Images are always 64x64.
pub const RESOLUTION: usize = 64;

/// Pixel count of one image.
pub const PIXELS: usize = RESOLUTION * RESOLUTION;

#[derive(Error, Debug)]
pub enum RasterError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Validation(String),
}

/// A line segment between two planar points, in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

impl Segment {
    pub fn new(a: (f64, f64), b: (f64, f64)) -> Self {
        Self { a, b }
    }

    pub fn length(&self) -> f64 {
        ((self.b.0 - self.a.0).powi(2) + (self.b.1 - self.a.1).powi(2)).sqrt()
    }
}

/// Road segments of one city in a local planar frame (x east, y north).
#[derive(Clone, Debug)]
pub struct StreetNetwork {
    pub city_id: String,
    pub segments: Vec<Segment>,
    /// Window anchor, in the same frame as the segments.
    pub center: (f64, f64),
    /// Geographic location carried through for reporting.
    pub origin_lonlat: Option<(f64, f64)>,
}

/// A square crop window: `side_m` meters on each side around `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub center: (f64, f64),
    pub side_m: f64,
}

impl Window {
    pub fn new(center: (f64, f64), side_m: f64) -> Result<Self, RasterError> {
        if !(side_m.is_finite() && side_m > 0.0) || !center.0.is_finite() || !center.1.is_finite()
        {
            return Err(RasterError::Validation(format!(
                "window must have a finite center and side_m > 0, got center {center:?}, side {side_m}"
            )));
        }
        Ok(Self { center, side_m })
    }

    /// `(x_min, y_min, x_max, y_max)` of the closed window square.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        let half = self.side_m / 2.0;
        (
            self.center.0 - half,
            self.center.1 - half,
            self.center.0 + half,
            self.center.1 + half,
        )
    }
}

/// A 64x64 single-channel image with values in `[0, 1]`.
///
/// Corpus images are binary (every pixel 0 or 1); decoder outputs are
/// probabilities. Row 0 is the north edge of the window and rows grow
/// southward.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterImage {
    pub city_id: String,
    pixels: Vec<f32>,
}

impl RasterImage {
    pub fn zeros(city_id: impl Into<String>) -> Self {
        Self {
            city_id: city_id.into(),
            pixels: vec![0.0; PIXELS],
        }
    }

    pub fn from_pixels(city_id: impl Into<String>, pixels: Vec<f32>) -> Result<Self, RasterError> {
        if pixels.len() != PIXELS {
            return Err(RasterError::Validation(format!(
                "image must have {PIXELS} pixels, got {}",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(RasterError::Validation(format!(
                "pixel value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            city_id: city_id.into(),
            pixels,
        })
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.pixels[row * RESOLUTION + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f32) {
        self.pixels[row * RESOLUTION + col] = value;
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    /// True when every pixel is exactly 0 or 1.
    pub fn is_binary(&self) -> bool {
        self.pixels.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Mean pixel value; the density proxy for street coverage.
    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&v| v as f64).sum::<f64>() / PIXELS as f64
    }

    pub fn count_ones(&self) -> usize {
        self.pixels.iter().filter(|&&v| v == 1.0).count()
    }
}

/// Disjoint train/test city ids, produced by [`split_dataset`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub seed: u64,
}
