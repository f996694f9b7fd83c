//! Binary (P5) PGM reading and writing.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{RasterError, RasterImage, PIXELS, RESOLUTION};

/// An 8-bit grayscale image of arbitrary size, for PGM I/O and
/// composite grids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0; width * height],
        }
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u8) {
        self.pixels[row * self.width + col] = value;
    }

    /// Writes a P5 PGM with maxval 255.
    pub fn write_pgm(&self, path: &Path) -> Result<(), RasterError> {
        let io_err = |source| RasterError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut buf = Vec::with_capacity(self.pixels.len() + 32);
        write!(buf, "P5\n{} {}\n255\n", self.width, self.height).expect("in-memory write");
        buf.extend_from_slice(&self.pixels);
        fs::write(path, buf).map_err(io_err)
    }

    /// Reads a P5 PGM (maxval up to 255), rescaling samples to 0..=255.
    pub fn read_pgm(path: &Path) -> Result<Self, RasterError> {
        let bytes = fs::read(path).map_err(|source| RasterError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let parse = |detail: String| RasterError::Parse {
            path: path.to_path_buf(),
            detail,
        };

        // Header: magic, width, height, maxval; '#' starts a comment.
        let mut pos = 0usize;
        let mut token = || -> Result<String, RasterError> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(parse("truncated header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };

        let magic = token()?;
        if magic != "P5" {
            return Err(parse(format!("expected P5 magic, got {magic:?}")));
        }
        let width: usize = token()?.parse().map_err(|e| parse(format!("bad width: {e}")))?;
        let height: usize = token()?.parse().map_err(|e| parse(format!("bad height: {e}")))?;
        let maxval: u32 = token()?.parse().map_err(|e| parse(format!("bad maxval: {e}")))?;
        if maxval == 0 || maxval > 255 {
            return Err(parse(format!("unsupported maxval {maxval}")));
        }
        // exactly one whitespace byte separates header and raster
        pos += 1;
        let expected = width * height;
        let raster = bytes.get(pos..pos + expected).ok_or_else(|| {
            parse(format!(
                "raster truncated: expected {expected} bytes, found {}",
                bytes.len().saturating_sub(pos)
            ))
        })?;
        let pixels = if maxval == 255 {
            raster.to_vec()
        } else {
            raster
                .iter()
                .map(|&v| ((v as u32 * 255) / maxval).min(255) as u8)
                .collect()
        };
        Ok(Self {
            width,
            height,
            pixels,
        })
    }
}

impl RasterImage {
    /// Quantizes to 8-bit grayscale; binary images map to {0, 255}.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: RESOLUTION,
            height: RESOLUTION,
            pixels: self
                .pixels()
                .iter()
                .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
                .collect(),
        }
    }

    /// Thresholds probabilities at `threshold` into a {0, 255} image.
    pub fn to_gray_thresholded(&self, threshold: f32) -> GrayImage {
        GrayImage {
            width: RESOLUTION,
            height: RESOLUTION,
            pixels: self
                .pixels()
                .iter()
                .map(|&v| if v >= threshold { 255 } else { 0 })
                .collect(),
        }
    }

    pub fn from_gray(city_id: impl Into<String>, img: &GrayImage) -> Result<Self, RasterError> {
        if img.width != RESOLUTION || img.height != RESOLUTION {
            return Err(RasterError::Validation(format!(
                "expected a {RESOLUTION}x{RESOLUTION} image, got {}x{}",
                img.width, img.height
            )));
        }
        let pixels: Vec<f32> = img.pixels.iter().map(|&v| v as f32 / 255.0).collect();
        debug_assert_eq!(pixels.len(), PIXELS);
        RasterImage::from_pixels(city_id, pixels)
    }

    pub fn write_pgm(&self, path: &Path) -> Result<(), RasterError> {
        self.to_gray().write_pgm(path)
    }

    pub fn read_pgm(city_id: impl Into<String>, path: &Path) -> Result<Self, RasterError> {
        Self::from_gray(city_id, &GrayImage::read_pgm(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_image_roundtrips_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.pgm");
        let mut img = RasterImage::zeros("t");
        img.set(0, 0, 1.0);
        img.set(63, 63, 1.0);
        img.set(10, 20, 1.0);
        img.write_pgm(&path).unwrap();
        let back = RasterImage::read_pgm("t", &path).unwrap();
        assert_eq!(back, img);
        assert!(back.is_binary());
    }

    #[test]
    fn header_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        let mut bytes = b"P5\n# a comment\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 128, 0]);
        std::fs::write(&path, bytes).unwrap();
        let img = GrayImage::read_pgm(&path).unwrap();
        assert_eq!((img.width, img.height), (2, 2));
        assert_eq!(img.pixels, vec![0, 255, 128, 0]);
    }

    #[test]
    fn truncated_raster_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        std::fs::write(&path, b"P5\n4 4\n255\nabc").unwrap();
        let err = GrayImage::read_pgm(&path).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
    }

    #[test]
    fn non_p5_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p2.pgm");
        std::fs::write(&path, b"P2\n1 1\n255\n0\n").unwrap();
        assert!(GrayImage::read_pgm(&path).is_err());
    }
}
