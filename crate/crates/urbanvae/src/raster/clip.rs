//! Liang-Barsky segment clipping and window cropping.

use super::{Segment, StreetNetwork, Window};

/// Clips `seg` to the closed axis-aligned rectangle, returning the
/// surviving piece. Segments that only touch the boundary are kept
/// (possibly degenerating to a point).
pub fn clip_segment(seg: &Segment, bounds: (f64, f64, f64, f64)) -> Option<Segment> {
    let (x_min, y_min, x_max, y_max) = bounds;
    let (dx, dy) = (seg.b.0 - seg.a.0, seg.b.1 - seg.a.1);
    let p = [-dx, dx, -dy, dy];
    let q = [
        seg.a.0 - x_min,
        x_max - seg.a.0,
        seg.a.1 - y_min,
        y_max - seg.a.1,
    ];
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for i in 0..4 {
        if p[i] == 0.0 {
            if q[i] < 0.0 {
                return None; // parallel and outside
            }
        } else {
            let r = q[i] / p[i];
            if p[i] < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    if t0 > t1 {
        return None;
    }
    let at = |t: f64| (seg.a.0 + t * dx, seg.a.1 + t * dy);
    Some(Segment::new(at(t0), at(t1)))
}

/// Crops a street network to `window`.
///
/// Every returned segment is the intersection of an input segment with
/// the closed window square; segments fully outside are dropped. The
/// output is re-expressed in window-local coordinates spanning
/// `[0, side_m]` on both axes (x east, y north; the window's NW corner
/// is at `(0, side_m)`, and rasterization maps it to pixel `(0, 0)`).
///
/// Cropping is idempotent: cropping the result again with a window of
/// the same side centered at `(side/2, side/2)` is the identity.
pub fn crop_window(net: &StreetNetwork, window: &Window) -> StreetNetwork {
    let bounds = window.bounds();
    let (x_min, y_min, ..) = bounds;
    let segments = net
        .segments
        .iter()
        .filter_map(|seg| clip_segment(seg, bounds))
        .map(|seg| Segment {
            a: (seg.a.0 - x_min, seg.a.1 - y_min),
            b: (seg.b.0 - x_min, seg.b.1 - y_min),
        })
        .collect();
    StreetNetwork {
        city_id: net.city_id.clone(),
        segments,
        center: (window.side_m / 2.0, window.side_m / 2.0),
        origin_lonlat: net.origin_lonlat,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn window3k() -> Window {
        // window spanning [0, 3000] x [0, 3000]
        Window::new((1500.0, 1500.0), 3000.0).unwrap()
    }

    fn net(segments: Vec<Segment>) -> StreetNetwork {
        StreetNetwork {
            city_id: "t".into(),
            segments,
            center: (1500.0, 1500.0),
            origin_lonlat: None,
        }
    }

    #[test]
    fn fully_inside_segment_is_translated_unchanged() {
        let w = Window::new((0.0, 0.0), 3000.0).unwrap();
        let seg = Segment::new((-100.0, 200.0), (300.0, -400.0));
        let out = crop_window(&net(vec![seg]), &w);
        assert_eq!(out.segments.len(), 1);
        // translation by (+1500, +1500) only
        assert_eq!(out.segments[0].a, (1400.0, 1700.0));
        assert_eq!(out.segments[0].b, (1800.0, 1100.0));
        assert_eq!(out.segments[0].length(), seg.length());
    }

    #[test]
    fn fully_outside_segment_is_dropped() {
        let out = crop_window(
            &net(vec![Segment::new((4000.0, 4000.0), (5000.0, 4100.0))]),
            &window3k(),
        );
        assert!(out.segments.is_empty());
    }

    #[test]
    fn crossing_segment_is_clipped_to_window_edges() {
        // Dense point-sampling oracle: sample 1e5 points along the
        // segment, keep those inside the window, compare extremes.
        let seg = Segment::new((-100.0, 1500.0), (3100.0, 1500.0));
        let out = crop_window(&net(vec![seg]), &window3k());
        assert_eq!(out.segments.len(), 1);
        let got = out.segments[0];

        let n = 100_000;
        let mut min_x = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        for i in 0..=n {
            let t = i as f64 / n as f64;
            let x = seg.a.0 + t * (seg.b.0 - seg.a.0);
            let y = seg.a.1 + t * (seg.b.1 - seg.a.1);
            if (0.0..=3000.0).contains(&x) && (0.0..=3000.0).contains(&y) {
                min_x = min_x.min(x);
                max_x = max_x.max(x);
            }
        }
        // sampling resolves the boundary to within one step (0.032 m)
        assert!((got.a.0.min(got.b.0) - min_x).abs() < 0.05);
        assert!((got.a.0.max(got.b.0) - max_x).abs() < 0.05);
        assert_eq!(got.a.1, 1500.0);
        assert_eq!(got.b.1, 1500.0);
        assert_eq!((got.a.0.min(got.b.0), got.a.0.max(got.b.0)), (0.0, 3000.0));
    }

    #[test]
    fn touching_the_boundary_keeps_a_degenerate_piece() {
        let out = crop_window(
            &net(vec![Segment::new((3000.0, 1000.0), (4000.0, 1000.0))]),
            &window3k(),
        );
        assert_eq!(out.segments.len(), 1);
        assert_eq!(out.segments[0].a, (3000.0, 1000.0));
        assert_eq!(out.segments[0].b, (3000.0, 1000.0));
    }

    #[test]
    fn cropping_is_idempotent_on_random_segments() {
        let mut rng = crate::seeds::rng(17, "clip-test", 0, 0);
        let w = window3k();
        let segs: Vec<Segment> = (0..500)
            .map(|_| {
                Segment::new(
                    (rng.gen_range(-2000.0..5000.0), rng.gen_range(-2000.0..5000.0)),
                    (rng.gen_range(-2000.0..5000.0), rng.gen_range(-2000.0..5000.0)),
                )
            })
            .collect();
        let once = crop_window(&net(segs), &w);
        let local = Window::new((1500.0, 1500.0), 3000.0).unwrap();
        let twice = crop_window(&once, &local);
        assert_eq!(once.segments.len(), twice.segments.len());
        for (a, b) in once.segments.iter().zip(&twice.segments) {
            assert!((a.a.0 - b.a.0).abs() < 1e-9);
            assert!((a.a.1 - b.a.1).abs() < 1e-9);
            assert!((a.b.0 - b.b.0).abs() < 1e-9);
            assert!((a.b.1 - b.b.1).abs() < 1e-9);
        }
    }
}
