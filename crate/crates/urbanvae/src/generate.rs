//! Sampling from the prior, decoding, and composite image grids.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::raster::{GrayImage, RasterImage, RESOLUTION};
use crate::seeds;
use crate::vae::{VaeError, VaeParams};
use crate::LATENT_DIM;

/// Decoded prior samples plus everything needed to regenerate them.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub seed: u64,
    pub codes: Vec<Vec<f32>>,
    /// Probability images, one per code (values in (0, 1)).
    pub images: Vec<RasterImage>,
    /// Binarization threshold applied at export time, if any.
    pub threshold: Option<f32>,
}

/// Sidecar record written next to exported samples so any figure can be
/// regenerated from its JSON alone.
#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
pub struct SampleSidecar {
    pub seed: u64,
    pub codes: Vec<Vec<f32>>,
    pub threshold: Option<f32>,
}

/// Draws `n` i.i.d. standard-normal 32-vectors.
///
/// Uses the ziggurat sampler over a ChaCha stream derived from `seed`,
/// so draws are reproducible for a fixed seed.
pub fn sample_prior(n: usize, seed: u64) -> Vec<Vec<f32>> {
    let mut rng = seeds::rng(seed, "prior", 0, 0);
    (0..n)
        .map(|_| (0..LATENT_DIM).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}

/// Decodes each code into a probability image.
pub fn generate(
    params: &VaeParams<f32>,
    codes: Vec<Vec<f32>>,
    seed: u64,
    threshold: Option<f32>,
) -> Result<SampleBatch, VaeError> {
    let mut images = Vec::with_capacity(codes.len());
    for (i, code) in codes.iter().enumerate() {
        let mut img = params.decode(code)?;
        img.city_id = format!("sample_{i:04}");
        images.push(img);
    }
    Ok(SampleBatch {
        seed,
        codes,
        images,
        threshold,
    })
}

impl SampleBatch {
    /// Export form of one sample: grayscale probabilities, or {0, 255}
    /// when a threshold is set.
    pub fn export_image(&self, index: usize) -> GrayImage {
        match self.threshold {
            Some(t) => self.images[index].to_gray_thresholded(t),
            None => self.images[index].to_gray(),
        }
    }

    pub fn sidecar(&self) -> SampleSidecar {
        SampleSidecar {
            seed: self.seed,
            codes: self.codes.clone(),
            threshold: self.threshold,
        }
    }
}

/// Width of the white gutters in composite grids, in pixels.
const GUTTER: usize = 2;

/// Originals (top row) over their posterior-mean reconstructions
/// (bottom row), separated by white gutters.
pub fn reconstruction_grid(
    params: &VaeParams<f32>,
    images: &[RasterImage],
) -> Result<GrayImage, VaeError> {
    if images.is_empty() || images.len() > 16 {
        return Err(VaeError::Validation(format!(
            "reconstruction grids take 1..=16 images, got {}",
            images.len()
        )));
    }
    let n = images.len();
    let width = n * RESOLUTION + (n - 1) * GUTTER;
    let height = 2 * RESOLUTION + GUTTER;
    let mut grid = GrayImage::new(width, height);
    grid.pixels.fill(255);

    for (i, img) in images.iter().enumerate() {
        // Reconstruction from the posterior mean (eps = 0), so the grid
        // is deterministic.
        let (mu, _) = params.encode(img)?;
        let recon = params.decode(&mu)?;
        let col0 = i * (RESOLUTION + GUTTER);
        blit(&mut grid, &img.to_gray(), 0, col0);
        blit(&mut grid, &recon.to_gray(), RESOLUTION + GUTTER, col0);
    }
    Ok(grid)
}

fn blit(dst: &mut GrayImage, src: &GrayImage, row0: usize, col0: usize) {
    for row in 0..src.height {
        for col in 0..src.width {
            dst.set(row0 + row, col0 + col, src.get(row, col));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vae::Architecture;

    fn model(seed: u64) -> VaeParams<f32> {
        VaeParams::init(Architecture::default(), seed).unwrap()
    }

    #[test]
    fn same_seed_draws_identical_codes() {
        assert_eq!(sample_prior(5, 9), sample_prior(5, 9));
        assert_ne!(sample_prior(5, 9), sample_prior(5, 10));
        assert_eq!(sample_prior(1, 3).len(), 1);
        assert_eq!(sample_prior(1, 3)[0].len(), LATENT_DIM);
    }

    #[test]
    fn prior_moments_pass_normality_bounds() {
        let draws = sample_prior(10_000, 77);
        for d in 0..LATENT_DIM {
            let mean: f64 = draws.iter().map(|c| c[d] as f64).sum::<f64>() / 10_000.0;
            let var: f64 = draws
                .iter()
                .map(|c| (c[d] as f64 - mean).powi(2))
                .sum::<f64>()
                / 9_999.0;
            let std = var.sqrt();
            assert!(mean.abs() < 0.05, "dim {d}: mean {mean}");
            assert!((0.95..1.05).contains(&std), "dim {d}: std {std}");
        }
    }

    #[test]
    fn generate_composes_decode_per_code() {
        let params = model(1);
        let codes = sample_prior(4, 5);
        let batch = generate(&params, codes.clone(), 5, None).unwrap();
        assert_eq!(batch.images.len(), 4);
        for (code, img) in codes.iter().zip(&batch.images) {
            assert_eq!(params.decode(code).unwrap().pixels(), img.pixels());
        }
        let again = generate(&params, codes, 5, None).unwrap();
        for (a, b) in batch.images.iter().zip(&again.images) {
            assert_eq!(a.pixels(), b.pixels());
        }
    }

    #[test]
    fn thresholded_exports_are_binary_bytes() {
        let params = model(2);
        let batch = generate(&params, sample_prior(3, 6), 6, Some(0.5)).unwrap();
        for i in 0..3 {
            let img = batch.export_image(i);
            assert!(img.pixels.iter().all(|&v| v == 0 || v == 255));
        }
    }

    #[test]
    fn grid_layout_and_contents() {
        let params = model(3);
        let mut rng = crate::seeds::rng(4, "generate-test", 0, 0);
        let images: Vec<RasterImage> = (0..3)
            .map(|i| {
                let mut img = RasterImage::zeros(format!("g{i}"));
                for row in 0..RESOLUTION {
                    for col in 0..RESOLUTION {
                        if rng.gen_bool(0.2) {
                            img.set(row, col, 1.0);
                        }
                    }
                }
                img
            })
            .collect();
        let grid = reconstruction_grid(&params, &images).unwrap();
        assert_eq!(grid.width, 3 * 64 + 2 * 2);
        assert_eq!(grid.height, 2 * 64 + 2);

        for (i, img) in images.iter().enumerate() {
            let col0 = i * 66;
            let top = img.to_gray();
            let (mu, _) = params.encode(img).unwrap();
            let bottom = params.decode(&mu).unwrap().to_gray();
            for row in 0..64 {
                for col in 0..64 {
                    assert_eq!(grid.get(row, col0 + col), top.get(row, col));
                    assert_eq!(grid.get(66 + row, col0 + col), bottom.get(row, col));
                }
            }
        }
        // gutters stay white
        assert_eq!(grid.get(64, 0), 255);
        assert_eq!(grid.get(0, 64), 255);

        let too_many: Vec<RasterImage> =
            (0..17).map(|i| RasterImage::zeros(format!("x{i}"))).collect();
        assert!(reconstruction_grid(&params, &too_many).is_err());
    }
}
