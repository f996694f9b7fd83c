//! Random crop + horizontal flip augmentation.

use rand::Rng;

use super::{RasterImage, RESOLUTION};

/// Zero padding added on each side before the random crop.
pub const PAD: usize = 4;

/// Pads the image with `PAD` zero pixels on every side (72x72), takes a
/// random 64x64 crop, and flips horizontally with probability 1/2.
///
/// Draw order from `rng` is fixed: row offset, column offset, flip.
pub fn augment(img: &RasterImage, rng: &mut impl Rng) -> RasterImage {
    let row_off = rng.gen_range(0..=2 * PAD);
    let col_off = rng.gen_range(0..=2 * PAD);
    let flip = rng.gen_bool(0.5);
    augment_with(img, row_off, col_off, flip)
}

/// Deterministic core of [`augment`]: crop the zero-padded image at
/// `(row_off, col_off)` (both in `0..=8`; `(4, 4)` is the identity crop)
/// and optionally mirror columns.
pub fn augment_with(img: &RasterImage, row_off: usize, col_off: usize, flip: bool) -> RasterImage {
    assert!(row_off <= 2 * PAD && col_off <= 2 * PAD, "offset beyond padding");
    let mut out = RasterImage::zeros(img.city_id.clone());
    for row in 0..RESOLUTION {
        let src_row = row + row_off;
        if src_row < PAD || src_row >= RESOLUTION + PAD {
            continue; // padding row stays zero
        }
        for col in 0..RESOLUTION {
            let src_col = col + col_off;
            if src_col < PAD || src_col >= RESOLUTION + PAD {
                continue;
            }
            let v = img.get(src_row - PAD, src_col - PAD);
            let dst_col = if flip { RESOLUTION - 1 - col } else { col };
            out.set(row, dst_col, v);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_binary(seed: u64) -> RasterImage {
        let mut rng = crate::seeds::rng(seed, "augment-test", 0, 0);
        let mut img = RasterImage::zeros("t");
        for row in 0..RESOLUTION {
            for col in 0..RESOLUTION {
                if rng.gen_bool(0.15) {
                    img.set(row, col, 1.0);
                }
            }
        }
        img
    }

    #[test]
    fn centered_crop_without_flip_is_identity() {
        let img = random_binary(1);
        assert_eq!(augment_with(&img, PAD, PAD, false), img);
    }

    #[test]
    fn flipping_twice_with_fixed_crop_is_identity() {
        let img = random_binary(2);
        let crop = augment_with(&img, PAD, PAD, false);
        let flipped = augment_with(&crop, PAD, PAD, true);
        let back = augment_with(&flipped, PAD, PAD, true);
        assert_eq!(back, crop);
    }

    #[test]
    fn single_pixel_moves_by_index_arithmetic() {
        // flip sends col to 63 - col; verified against explicit reversal.
        let mut img = RasterImage::zeros("t");
        img.set(10, 3, 1.0);
        let out = augment_with(&img, PAD, PAD, true);
        assert_eq!(out.get(10, 60), 1.0);
        assert_eq!(out.count_ones(), 1);

        let mut reversed = RasterImage::zeros("t");
        for row in 0..RESOLUTION {
            for col in 0..RESOLUTION {
                reversed.set(row, RESOLUTION - 1 - col, img.get(row, col));
            }
        }
        assert_eq!(out, reversed);
    }

    #[test]
    fn seeded_stream_is_reproducible() {
        let img = random_binary(3);
        let a = augment(&img, &mut crate::seeds::rng_keyed(9, "augment", "t", 0));
        let b = augment(&img, &mut crate::seeds::rng_keyed(9, "augment", "t", 0));
        assert_eq!(a, b);
    }

    proptest! {
        /// Ones that stay inside the crop are moved, never blended: the
        /// output count equals the overlap count and stays binary.
        #[test]
        fn preserves_surviving_ones(seed in 0u64..500, row_off in 0usize..9, col_off in 0usize..9, flip: bool) {
            let img = random_binary(seed);
            let out = augment_with(&img, row_off, col_off, flip);
            prop_assert!(out.is_binary());
            let mut surviving = 0;
            for row in 0..RESOLUTION {
                for col in 0..RESOLUTION {
                    if img.get(row, col) == 1.0 {
                        let dst_row = (row + PAD).wrapping_sub(row_off);
                        let dst_col = (col + PAD).wrapping_sub(col_off);
                        if dst_row < RESOLUTION && dst_col < RESOLUTION {
                            surviving += 1;
                        }
                    }
                }
            }
            prop_assert_eq!(out.count_ones(), surviving);
        }
    }
}
