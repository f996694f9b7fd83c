//! Supercover rasterization onto the 64x64 grid.

use super::{RasterImage, StreetNetwork, Window, RESOLUTION};

/// Rasterizes a window-cropped network: a pixel becomes 1 iff some
/// segment intersects that pixel's closed cell (cell size `side_m / 64`).
///
/// This is the supercover of each segment: every cell the segment passes
/// through, including cells touched only at a corner (an exact corner
/// crossing lights all cells sharing the corner, since the closed cells
/// all contain that point). Pixel `(0, 0)` is the window's NW corner and
/// rows grow southward.
///
/// Expects `net` in window-local coordinates as produced by
/// [`crop_window`](super::crop_window); anything outside the window is
/// clamped away.
pub fn rasterize(net: &StreetNetwork, window: &Window) -> RasterImage {
    let cell = window.side_m / RESOLUTION as f64;
    let mut img = RasterImage::zeros(net.city_id.clone());
    for seg in &net.segments {
        // Grid coordinates: u along columns, v along rows (v flips y so
        // that row 0 is the window's north edge).
        let (u0, v0) = (seg.a.0 / cell, (window.side_m - seg.a.1) / cell);
        let (u1, v1) = (seg.b.0 / cell, (window.side_m - seg.b.1) / cell);
        mark_supercover(&mut img, (u0, v0), (u1, v1));
    }
    img
}

/// Index range of closed unit cells `[i, i+1]` intersecting `[lo, hi]`,
/// clamped to the grid.
fn cell_range(lo: f64, hi: f64) -> Option<(usize, usize)> {
    let first = (lo.ceil() as i64 - 1).max(0);
    let last = (hi.floor() as i64).min(RESOLUTION as i64 - 1);
    (first <= last).then_some((first as usize, last as usize))
}

/// Marks every closed grid cell intersected by the segment in grid
/// coordinates. Works row band by row band: within the band of rows
/// `[j, j+1]` the segment covers a contiguous `u` interval, and every
/// cell overlapping that interval belongs to the supercover.
fn mark_supercover(img: &mut RasterImage, p0: (f64, f64), p1: (f64, f64)) {
    let (du, dv) = (p1.0 - p0.0, p1.1 - p0.1);
    let rows = match cell_range(p0.1.min(p1.1), p0.1.max(p1.1)) {
        Some(r) => r,
        None => return,
    };
    for row in rows.0..=rows.1 {
        // Closed parameter band where v(t) lies in [row, row+1].
        let (mut t_lo, mut t_hi) = (0.0f64, 1.0f64);
        if dv == 0.0 {
            // Horizontal in v: row range above already filtered it in.
        } else {
            let ta = (row as f64 - p0.1) / dv;
            let tb = (row as f64 + 1.0 - p0.1) / dv;
            t_lo = ta.min(tb).max(0.0);
            t_hi = ta.max(tb).min(1.0);
            if t_lo > t_hi {
                continue;
            }
        }
        let ua = p0.0 + t_lo * du;
        let ub = p0.0 + t_hi * du;
        if let Some((c0, c1)) = cell_range(ua.min(ub), ua.max(ub)) {
            for col in c0..=c1 {
                img.set(row, col, 1.0);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{crop_window, Segment as Seg};
    use rand::Rng;

    fn window() -> Window {
        Window::new((1500.0, 1500.0), 3000.0).unwrap()
    }

    fn local_net(segments: Vec<Seg>) -> StreetNetwork {
        StreetNetwork {
            city_id: "t".into(),
            segments,
            center: (1500.0, 1500.0),
            origin_lonlat: None,
        }
    }

    /// Brute-force oracle: walk each segment in steps of cell/100 and
    /// mark containing cells. Matches the supercover exactly away from
    /// cell boundaries; tests perturb endpoints to avoid exact ties.
    fn sampling_oracle(net: &StreetNetwork, window: &Window) -> RasterImage {
        let cell = window.side_m / RESOLUTION as f64;
        let mut img = RasterImage::zeros(net.city_id.clone());
        for seg in &net.segments {
            let steps = ((seg.length() / (cell / 100.0)).ceil() as usize).max(1);
            for i in 0..=steps {
                let t = i as f64 / steps as f64;
                let x = seg.a.0 + t * (seg.b.0 - seg.a.0);
                let y = seg.a.1 + t * (seg.b.1 - seg.a.1);
                let col = ((x / cell).floor() as i64).clamp(0, 63) as usize;
                let row = (((window.side_m - y) / cell).floor() as i64).clamp(0, 63) as usize;
                img.set(row, col, 1.0);
            }
        }
        img
    }

    #[test]
    fn empty_network_rasterizes_to_zeros() {
        let img = rasterize(&local_net(vec![]), &window());
        assert_eq!(img.count_ones(), 0);
        assert!(img.is_binary());
    }

    #[test]
    fn horizontal_midline_on_cell_boundary_fills_two_rows() {
        // y = 1500 lies exactly on the boundary between rows 31 and 32.
        let seg = Seg::new((0.0, 1500.0), (3000.0, 1500.0));
        let img = rasterize(&local_net(vec![seg]), &window());
        for col in 0..64 {
            assert_eq!(img.get(31, col), 1.0);
            assert_eq!(img.get(32, col), 1.0);
        }
        assert_eq!(img.count_ones(), 128);
    }

    #[test]
    fn horizontal_line_off_boundary_fills_one_row() {
        let seg = Seg::new((0.0, 1510.0), (3000.0, 1510.0));
        let img = rasterize(&local_net(vec![seg]), &window());
        // v = (3000 - 1510) / 46.875 = 31.786..., row 31
        for col in 0..64 {
            assert_eq!(img.get(31, col), 1.0);
        }
        assert_eq!(img.count_ones(), 64);
    }

    #[test]
    fn exact_corner_crossing_marks_all_four_cells() {
        // Diagonal through the grid corner at (1500, 1500), i.e. grid
        // point (32, 32): cells (31,31), (31,32), (32,31), (32,32) all
        // contain the corner point.
        let seg = Seg::new((1453.125, 1453.125), (1546.875, 1546.875));
        let img = rasterize(&local_net(vec![seg]), &window());
        assert_eq!(img.get(31, 31), 1.0);
        assert_eq!(img.get(31, 32), 1.0);
        assert_eq!(img.get(32, 31), 1.0);
        assert_eq!(img.get(32, 32), 1.0);
    }

    /// Smallest distance (in grid units) from the segment to any grid
    /// corner near its bounding box.
    fn min_corner_distance(seg: &Seg, cell: f64) -> f64 {
        let (u0, v0) = (seg.a.0 / cell, seg.a.1 / cell);
        let (u1, v1) = (seg.b.0 / cell, seg.b.1 / cell);
        let (du, dv) = (u1 - u0, v1 - v0);
        let len_sq = du * du + dv * dv;
        let mut best = f64::INFINITY;
        for cu in (u0.min(u1).floor() as i64 - 1)..=(u0.max(u1).ceil() as i64 + 1) {
            for cv in (v0.min(v1).floor() as i64 - 1)..=(v0.max(v1).ceil() as i64 + 1) {
                let (px, py) = (cu as f64 - u0, cv as f64 - v0);
                let t = if len_sq == 0.0 {
                    0.0
                } else {
                    ((px * du + py * dv) / len_sq).clamp(0.0, 1.0)
                };
                let (ex, ey) = (px - t * du, py - t * dv);
                best = best.min((ex * ex + ey * ey).sqrt());
            }
        }
        best
    }

    /// Draws segments that keep clear of every grid corner by more than
    /// the oracle's sampling step, so each touched cell's chord exceeds
    /// the step and the sampling oracle provably sees it.
    pub(crate) fn boundary_avoiding_segments(
        rng: &mut rand_chacha::ChaCha8Rng,
        count: usize,
        side: f64,
    ) -> Vec<Seg> {
        let cell = side / 64.0;
        let margin = cell / 100.0 * 1.05;
        let mut out = Vec::with_capacity(count);
        let span = cell..side - cell;
        while out.len() < count {
            let ax = rng.gen_range(span.clone());
            let ay = rng.gen_range(span.clone());
            let bx = ax + rng.gen_range(-300.0..300.0);
            let by = ay + rng.gen_range(-300.0..300.0);
            if !span.contains(&bx) || !span.contains(&by) {
                continue;
            }
            let seg = Seg::new((ax, ay), (bx, by));
            if min_corner_distance(&seg, cell) * cell > margin {
                out.push(seg);
            }
        }
        out
    }

    #[test]
    fn matches_sampling_oracle_on_random_boundary_avoiding_segments() {
        let mut rng = crate::seeds::rng(23, "raster-test", 0, 0);
        let w = window();
        let segs = boundary_avoiding_segments(&mut rng, 1000, 3000.0);
        let net = local_net(segs);
        let got = rasterize(&net, &w);
        let want = sampling_oracle(&net, &w);
        for row in 0..64 {
            for col in 0..64 {
                assert_eq!(
                    got.get(row, col),
                    want.get(row, col),
                    "mismatch at ({row}, {col})"
                );
            }
        }
    }

    #[test]
    fn mirror_equivariance_on_random_networks() {
        let mut rng = crate::seeds::rng(29, "raster-test", 1, 0);
        let w = window();
        let cell = 3000.0 / 64.0;
        for _ in 0..200 {
            let segs: Vec<Seg> = (0..rng.gen_range(1..20))
                .map(|_| {
                    // keep endpoints off vertical cell boundaries
                    let mut coord = || loop {
                        let v: f64 = rng.gen_range(0.0..3000.0);
                        let frac = (v / cell).fract();
                        if frac > 0.01 && frac < 0.99 {
                            return v;
                        }
                    };
                    Seg::new((coord(), coord()), (coord(), coord()))
                })
                .collect();
            let mirrored: Vec<Seg> = segs
                .iter()
                .map(|s| Seg::new((3000.0 - s.a.0, s.a.1), (3000.0 - s.b.0, s.b.1)))
                .collect();
            let img = rasterize(&local_net(segs), &w);
            let img_m = rasterize(&local_net(mirrored), &w);
            for row in 0..64 {
                for col in 0..64 {
                    assert_eq!(img.get(row, col), img_m.get(row, 63 - col));
                }
            }
        }
    }

    #[test]
    fn raster_of_cropped_network_is_binary_64x64() {
        let mut rng = crate::seeds::rng(31, "raster-test", 2, 0);
        let w = window();
        let segs: Vec<Seg> = (0..200)
            .map(|_| {
                Seg::new(
                    (rng.gen_range(-1000.0..4000.0), rng.gen_range(-1000.0..4000.0)),
                    (rng.gen_range(-1000.0..4000.0), rng.gen_range(-1000.0..4000.0)),
                )
            })
            .collect();
        let raw = StreetNetwork {
            city_id: "t".into(),
            segments: segs,
            center: (1500.0, 1500.0),
            origin_lonlat: None,
        };
        let img = rasterize(&crop_window(&raw, &w), &w);
        assert!(img.is_binary());
        assert!(img.count_ones() > 0);
    }
}
