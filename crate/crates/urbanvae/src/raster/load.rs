//! Street geometry ingestion from JSON feature collections.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::Deserialize;

use super::{RasterError, Segment, StreetNetwork};

/// Mean Earth radius used by the local equirectangular projection.
const EARTH_RADIUS_M: f64 = 6_371_000.0;

#[derive(Deserialize)]
struct GeometryFile {
    #[serde(rename = "type", default)]
    collection_type: Option<String>,
    #[serde(default)]
    city_id: Option<String>,
    coordinate_mode: String,
    center: [f64; 2],
    #[serde(default)]
    origin_lonlat: Option<[f64; 2]>,
    features: Vec<Feature>,
}

#[derive(Deserialize)]
struct Feature {
    geometry: Geometry,
}

#[derive(Deserialize)]
#[serde(tag = "type")]
enum Geometry {
    LineString { coordinates: Vec<[f64; 2]> },
    MultiLineString { coordinates: Vec<Vec<[f64; 2]>> },
}

/// Loads one city's street geometry.
///
/// The file is a feature collection of LineString / MultiLineString
/// features with a declared `coordinate_mode`:
///
/// - `"meters"`: coordinates are used as-is in a local planar frame
///   (x east, y north) and `center` names the window anchor.
/// - `"lonlat"`: degree coordinates are projected onto a local
///   equirectangular plane about `center = [lon, lat]`, which becomes
///   `(0, 0)`; over a 3 km window the projection error is negligible.
///
/// An empty feature collection is allowed (a warning is logged, since a
/// city with no streets is usually an upstream extraction problem).
pub fn load_street_geometry(path: &Path) -> Result<StreetNetwork, RasterError> {
    let file = File::open(path).map_err(|source| RasterError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let parsed: GeometryFile =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| RasterError::Parse {
            path: path.to_path_buf(),
            detail: format!("line {}, column {}: {e}", e.line(), e.column()),
        })?;

    if let Some(t) = &parsed.collection_type {
        if t != "FeatureCollection" {
            return Err(RasterError::Parse {
                path: path.to_path_buf(),
                detail: format!("expected a FeatureCollection, got type {t:?}"),
            });
        }
    }

    let city_id = parsed.city_id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "unnamed".to_string())
    });

    let (project, center, origin_lonlat): (Box<dyn Fn([f64; 2]) -> (f64, f64)>, _, _) =
        match parsed.coordinate_mode.as_str() {
            "meters" => (
                Box::new(|p: [f64; 2]| (p[0], p[1])),
                (parsed.center[0], parsed.center[1]),
                parsed.origin_lonlat.map(|o| (o[0], o[1])),
            ),
            "lonlat" => {
                let (lon0, lat0) = (parsed.center[0], parsed.center[1]);
                let scale_x = EARTH_RADIUS_M * lat0.to_radians().cos();
                (
                    Box::new(move |p: [f64; 2]| {
                        (
                            (p[0] - lon0).to_radians() * scale_x,
                            (p[1] - lat0).to_radians() * EARTH_RADIUS_M,
                        )
                    }),
                    (0.0, 0.0),
                    Some((lon0, lat0)),
                )
            }
            other => {
                return Err(RasterError::Config(format!(
                    "{}: unknown coordinate_mode {other:?} (expected \"meters\" or \"lonlat\")",
                    path.display()
                )))
            }
        };

    let mut segments = Vec::new();
    for (idx, feature) in parsed.features.iter().enumerate() {
        let lines: Vec<&Vec<[f64; 2]>> = match &feature.geometry {
            Geometry::LineString { coordinates } => vec![coordinates],
            Geometry::MultiLineString { coordinates } => coordinates.iter().collect(),
        };
        for line in lines {
            if line.len() < 2 {
                return Err(RasterError::Parse {
                    path: path.to_path_buf(),
                    detail: format!("feature {idx}: line with {} point(s)", line.len()),
                });
            }
            if let Some(bad) = line.iter().find(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return Err(RasterError::Parse {
                    path: path.to_path_buf(),
                    detail: format!("feature {idx}: non-finite coordinate {bad:?}"),
                });
            }
            for pair in line.windows(2) {
                segments.push(Segment::new(project(pair[0]), project(pair[1])));
            }
        }
    }

    if segments.is_empty() {
        log::warn!("{}: empty street network ({city_id})", path.display());
    }

    Ok(StreetNetwork {
        city_id,
        segments,
        center,
        origin_lonlat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn meters_mode_is_identity_ingestion() {
        let f = write_tmp(
            r#"{"type":"FeatureCollection","city_id":"t","coordinate_mode":"meters","center":[0,0],
                "features":[{"type":"Feature","geometry":{"type":"LineString","coordinates":[[0,0],[100,0]]}}]}"#,
        );
        let net = load_street_geometry(f.path()).unwrap();
        assert_eq!(net.segments.len(), 1);
        assert_eq!(net.segments[0].length(), 100.0);
        assert_eq!(net.center, (0.0, 0.0));
        assert_eq!(net.origin_lonlat, None);
    }

    #[test]
    fn lonlat_mode_projects_at_declared_center() {
        // Hand oracle: R * d_lambda * cos(0) = 6371000 * 0.001 * pi / 180
        // = 111.1949 m for a millidegree of longitude at the equator.
        let f = write_tmp(
            r#"{"coordinate_mode":"lonlat","center":[10.0,0.0],
                "features":[{"geometry":{"type":"LineString","coordinates":[[10.0,0.0],[10.001,0.0]]}}]}"#,
        );
        let net = load_street_geometry(f.path()).unwrap();
        assert_eq!(net.segments.len(), 1);
        assert!((net.segments[0].length() - 111.1949).abs() < 1e-3);
        assert_eq!(net.center, (0.0, 0.0));
        assert_eq!(net.origin_lonlat, Some((10.0, 0.0)));
    }

    #[test]
    fn empty_collection_is_a_warning_not_an_error() {
        let f = write_tmp(r#"{"coordinate_mode":"meters","center":[0,0],"features":[]}"#);
        let net = load_street_geometry(f.path()).unwrap();
        assert!(net.segments.is_empty());
    }

    #[test]
    fn unknown_mode_is_a_config_error() {
        let f = write_tmp(r#"{"coordinate_mode":"feet","center":[0,0],"features":[]}"#);
        let err = load_street_geometry(f.path()).unwrap_err();
        assert!(matches!(err, RasterError::Config(_)), "{err}");
        assert!(err.to_string().contains("feet"));
    }

    #[test]
    fn malformed_features_name_the_feature() {
        let f = write_tmp(
            r#"{"coordinate_mode":"meters","center":[0,0],
                "features":[{"geometry":{"type":"LineString","coordinates":[[0,0],[1,1]]}},
                            {"geometry":{"type":"LineString","coordinates":[[5,5]]}}]}"#,
        );
        let err = load_street_geometry(f.path()).unwrap_err();
        assert!(err.to_string().contains("feature 1"), "{err}");
    }

    #[test]
    fn syntax_errors_name_the_line() {
        let f = write_tmp("{\n  \"coordinate_mode\": \"meters\"\n  oops\n}");
        let err = load_street_geometry(f.path()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn multilinestring_expands_to_segments() {
        let f = write_tmp(
            r#"{"coordinate_mode":"meters","center":[0,0],
                "features":[{"geometry":{"type":"MultiLineString",
                  "coordinates":[[[0,0],[1,0],[2,0]],[[5,5],[6,5]]]}}]}"#,
        );
        let net = load_street_geometry(f.path()).unwrap();
        assert_eq!(net.segments.len(), 3);
    }
}
