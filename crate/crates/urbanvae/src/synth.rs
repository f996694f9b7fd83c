//! Procedural street patterns, so the whole pipeline runs without any
//! external data.
//!
//! Three structurally distinct families: jittered orthogonal grids,
//! radial spoke-and-ring webs, and random (Poisson) line fields. Each
//! city is generated from a stream keyed by its id, so a corpus is
//! reproducible city by city in any order.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde_json::json;

use crate::raster::{RasterError, Segment, StreetNetwork};
use crate::seeds;

/// Pattern family of a synthetic city.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthClass {
    Grid,
    Radial,
    Random,
}

impl SynthClass {
    pub const ALL: [SynthClass; 3] = [SynthClass::Grid, SynthClass::Radial, SynthClass::Random];

    pub fn name(&self) -> &'static str {
        match self {
            SynthClass::Grid => "grid",
            SynthClass::Radial => "radial",
            SynthClass::Random => "random",
        }
    }
}

impl fmt::Display for SynthClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SynthClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "grid" => Ok(SynthClass::Grid),
            "radial" => Ok(SynthClass::Radial),
            "random" => Ok(SynthClass::Random),
            other => Err(format!(
                "unknown class {other:?} (expected grid, radial, or random)"
            )),
        }
    }
}

/// Half-extent of generated geometry; a bit beyond the 3 km window so
/// crops stay full.
const EXTENT: f64 = 1_700.0;

/// Generates one synthetic city around `(0, 0)` in meters.
pub fn synth_network(class: SynthClass, city_id: &str, seed: u64) -> StreetNetwork {
    let mut rng = seeds::rng_keyed(seed, "synth", city_id, 0);
    let segments = match class {
        SynthClass::Grid => grid_segments(&mut rng),
        SynthClass::Radial => radial_segments(&mut rng),
        SynthClass::Random => random_segments(&mut rng),
    };
    // Plausible geographic anchor so map exports have something to plot.
    let origin_lonlat = Some((rng.gen_range(-180.0..180.0), rng.gen_range(-60.0..60.0)));
    StreetNetwork {
        city_id: city_id.to_string(),
        segments,
        center: (0.0, 0.0),
        origin_lonlat,
    }
}

/// Round-robin corpus: `city 3i` is grid, `3i+1` radial, `3i+2` random
/// (for the default class list). Ids carry the class name as a prefix.
pub fn synth_corpus(classes: &[SynthClass], count: usize, seed: u64) -> Vec<StreetNetwork> {
    (0..count)
        .map(|i| {
            let class = classes[i % classes.len()];
            let city_id = format!("{}_{i:04}", class.name());
            synth_network(class, &city_id, seed)
        })
        .collect()
}

/// Jittered orthogonal lattice.
///
/// Each city is a handful of parameters (spacing, phases, jitter
/// amplitude). Node jitter stays well under half a raster cell so the
/// pattern reads as a clean grid while no two cities are identical.
fn grid_segments(rng: &mut impl Rng) -> Vec<Segment> {
    let spacing = rng.gen_range(180.0..280.0);
    let phase_x = rng.gen_range(0.0..spacing);
    let phase_y = rng.gen_range(0.0..spacing);
    let amp = rng.gen_range(4.0..14.0);

    let line_coords = |phase: f64| -> Vec<f64> {
        let mut out = Vec::new();
        let mut v = -EXTENT + phase;
        while v <= EXTENT {
            out.push(v);
            v += spacing;
        }
        out
    };
    let xs = line_coords(phase_x);
    let ys = line_coords(phase_y);

    // Nodes drawn once so shared corners agree between edges.
    let nodes: Vec<(f64, f64)> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .map(|(x, y)| (x + amp * rng_unit(rng), y + amp * rng_unit(rng)))
        .collect();
    let at = |i: usize, j: usize| nodes[j * xs.len() + i];

    let mut segments = Vec::new();
    for j in 0..ys.len() {
        for i in 0..xs.len() {
            if i + 1 < xs.len() {
                segments.push(Segment::new(at(i, j), at(i + 1, j)));
            }
            if j + 1 < ys.len() {
                segments.push(Segment::new(at(i, j), at(i, j + 1)));
            }
        }
    }
    segments
}

fn rng_unit(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-1.0..1.0)
}

/// Spokes from the center plus concentric ring chords, parameterized by
/// spoke count, rotation, and ring start/step.
fn radial_segments(rng: &mut impl Rng) -> Vec<Segment> {
    let spokes = rng.gen_range(6..10usize);
    let rotation = rng.gen_range(0.0..std::f64::consts::TAU);
    let ring_start = rng.gen_range(280.0..400.0);
    let ring_step = rng.gen_range(500.0..700.0);
    let wobble = 0.006;

    let mut angles: Vec<f64> = (0..spokes)
        .map(|i| rotation + i as f64 / spokes as f64 * std::f64::consts::TAU)
        .collect();
    angles.push(angles[0]); // close the rings

    let mut radii = Vec::new();
    let mut r = ring_start;
    while r < EXTENT {
        radii.push(r);
        r += ring_step;
    }

    let mut segments = Vec::new();
    for &angle in &angles[..spokes] {
        let tip = EXTENT * (1.0 + wobble * rng_unit(rng));
        segments.push(Segment::new((0.0, 0.0), (tip * angle.cos(), tip * angle.sin())));
    }
    for &radius in &radii {
        let mut prev: Option<(f64, f64)> = None;
        for &angle in &angles {
            let rj = radius * (1.0 + wobble * rng_unit(rng));
            let p = (rj * angle.cos(), rj * angle.sin());
            if let Some(q) = prev {
                segments.push(Segment::new(q, p));
            }
            prev = Some(p);
        }
    }
    segments
}

/// Poisson line field: uniform in angle and signed offset from center.
/// Line count stays small enough that a 32-dimensional code can in
/// principle describe the field.
fn random_segments(rng: &mut impl Rng) -> Vec<Segment> {
    let lines = rng.gen_range(12..17usize);
    (0..lines)
        .map(|_| {
            let theta = rng.gen_range(0.0..std::f64::consts::PI);
            let offset = rng.gen_range(-1_100.0..1_100.0);
            let (nx, ny) = (theta.cos(), theta.sin());
            let (dx, dy) = (-ny, nx);
            let (px, py) = (offset * nx, offset * ny);
            let half = 2_500.0;
            Segment::new((px - dx * half, py - dy * half), (px + dx * half, py + dy * half))
        })
        .collect()
}

/// Writes the network in the geometry-JSON format the loader ingests
/// (meters mode, one MultiLineString feature).
pub fn write_geometry_json(net: &StreetNetwork, path: &Path) -> Result<(), RasterError> {
    let coordinates: Vec<serde_json::Value> = net
        .segments
        .iter()
        .map(|s| json!([[s.a.0, s.a.1], [s.b.0, s.b.1]]))
        .collect();
    let doc = json!({
        "type": "FeatureCollection",
        "city_id": net.city_id,
        "coordinate_mode": "meters",
        "center": [net.center.0, net.center.1],
        "origin_lonlat": net.origin_lonlat.map(|(lon, lat)| json!([lon, lat])),
        "features": [{
            "type": "Feature",
            "geometry": {"type": "MultiLineString", "coordinates": coordinates},
            "properties": {}
        }]
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).expect("geometry serializes");
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    })
}
