//! K-means clustering (Lloyd's algorithm, k-means++ init) and the
//! elbow-method suggestion for K.

use std::collections::BTreeMap;

use rand::Rng;

use super::{LatentError, UrbanNetworkVector};
use crate::seeds;

/// Fitted clustering: centroids, per-city assignments, and the
/// within-cluster sum of squared distances.
#[derive(Clone, Debug)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    /// city id -> cluster index, in input order.
    pub assignments: Vec<(String, usize)>,
    pub wcss: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl ClusterModel {
    pub fn assignment_map(&self) -> BTreeMap<&str, usize> {
        self.assignments
            .iter()
            .map(|(id, c)| (id.as_str(), *c))
            .collect()
    }
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = dist_sq(point, c);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn assignments_cost(data: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut cost = 0.0;
    let assign: Vec<usize> = data
        .iter()
        .map(|p| {
            let (idx, d) = nearest(p, centroids);
            cost += d;
            idx
        })
        .collect();
    (assign, cost)
}

/// k-means++ seeding: first centroid uniform, then D^2-weighted picks.
fn kmeanspp_init(data: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut centroids: Vec<Vec<f64>> = vec![data[rng.gen_range(0..data.len())].clone()];
    let mut min_d: Vec<f64> = data.iter().map(|p| dist_sq(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = min_d.iter().sum();
        let idx = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = data.len() - 1;
            for (i, &w) in min_d.iter().enumerate() {
                target -= w;
                if target <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        } else {
            rng.gen_range(0..data.len())
        };
        centroids.push(data[idx].clone());
        for (d, p) in min_d.iter_mut().zip(data) {
            *d = d.min(dist_sq(p, centroids.last().expect("just pushed")));
        }
    }
    centroids
}

const MAX_ITERS: usize = 300;

/// One Lloyd run from the given initial centroids.
///
/// Converges when assignments stop changing (or at 300 iterations).
/// Empty clusters are repaired by reseeding to the point farthest from
/// its assigned centroid. WCSS is non-increasing across iterations.
fn lloyd(data: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<Vec<f64>>, Vec<usize>, f64) {
    let k = centroids.len();
    let dim = data[0].len();
    let (mut assign, mut cost) = assignments_cost(data, &centroids);
    for _ in 0..MAX_ITERS {
        // Means of assigned points; empties reseed to the point farthest
        // from its current centroid (distances against the old centroids,
        // which the assignments refer to).
        let mut sums = vec![vec![0.0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in data.iter().zip(&assign) {
            counts[a] += 1;
            for (s, &v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut claimed: Vec<usize> = Vec::new();
        let mut updated = centroids.clone();
        for c in 0..k {
            if counts[c] > 0 {
                updated[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            } else {
                let far = (0..data.len())
                    .filter(|i| !claimed.contains(i))
                    .max_by(|&i, &j| {
                        dist_sq(&data[i], &centroids[assign[i]])
                            .total_cmp(&dist_sq(&data[j], &centroids[assign[j]]))
                    })
                    .expect("data non-empty");
                claimed.push(far);
                updated[c] = data[far].clone();
            }
        }
        centroids = updated;
        let (next_assign, next_cost) = assignments_cost(data, &centroids);
        debug_assert!(
            next_cost <= cost * (1.0 + 1e-12) + 1e-12,
            "WCSS increased: {cost} -> {next_cost}"
        );
        let converged = next_assign == assign;
        assign = next_assign;
        cost = next_cost;
        if converged {
            break;
        }
    }
    (centroids, assign, cost)
}

fn to_rows(vectors: &[UrbanNetworkVector]) -> Vec<Vec<f64>> {
    vectors
        .iter()
        .map(|v| v.values().iter().map(|&x| x as f64).collect())
        .collect()
}

/// Best-of-`restarts` K-means with k-means++ initialization.
pub fn kmeans(
    vectors: &[UrbanNetworkVector],
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterModel, LatentError> {
    if k == 0 || k > vectors.len() {
        return Err(LatentError::Validation(format!(
            "k must lie in 1..={}, got {k}",
            vectors.len()
        )));
    }
    let data = to_rows(vectors);
    let restarts = restarts.max(1);
    let mut best: Option<(Vec<Vec<f64>>, Vec<usize>, f64)> = None;
    for r in 0..restarts {
        let mut rng = seeds::rng(seed, "kmeans", r as u64, k as u64);
        let init = kmeanspp_init(&data, k, &mut rng);
        let run = lloyd(&data, init);
        if best.as_ref().map_or(true, |b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (centroids, assign, wcss) = best.expect("at least one restart");
    finish_model(vectors, &data, centroids, assign, wcss, k, seed, restarts)
}

#[allow(clippy::too_many_arguments)]
fn finish_model(
    vectors: &[UrbanNetworkVector],
    data: &[Vec<f64>],
    centroids: Vec<Vec<f64>>,
    assign: Vec<usize>,
    wcss: f64,
    k: usize,
    seed: u64,
    restarts: usize,
) -> Result<ClusterModel, LatentError> {
    // Post-hoc invariants: every point sits with its nearest centroid and
    // the stored WCSS is the cost implied by the assignments.
    debug_assert!(data.iter().zip(&assign).all(|(p, &a)| {
        let (n, _) = nearest(p, &centroids);
        n == a
    }));
    debug_assert!({
        let implied: f64 = data
            .iter()
            .zip(&assign)
            .map(|(p, &a)| dist_sq(p, &centroids[a]))
            .sum();
        (implied - wcss).abs() <= 1e-9 * (1.0 + implied)
    });
    Ok(ClusterModel {
        k,
        centroids,
        assignments: vectors
            .iter()
            .map(|v| v.city_id.clone())
            .zip(assign)
            .collect(),
        wcss,
        seed,
        restarts,
    })
}

/// WCSS-vs-K curve and the elbow suggestion.
#[derive(Clone, Debug)]
pub struct ElbowCurve {
    pub points: Vec<(usize, f64)>,
    pub suggested_k: usize,
    /// Normalized perpendicular distance from the curve to its chord at
    /// the suggestion; small values mean there is no clear elbow.
    pub max_chord_distance: f64,
    pub low_confidence: bool,
}

/// Chord-distance threshold below which the suggestion is flagged.
///
/// Calibrated on reference runs: a genuine corner (well-separated blobs)
/// scores above 0.4, while structureless data still shows ~0.15 from the
/// smooth diminishing-returns decline of WCSS in 32 dimensions.
const LOW_CONFIDENCE: f64 = 0.2;

/// Runs K-means for K = 1..=k_max and suggests the K that maximizes the
/// perpendicular distance to the chord joining the curve's endpoints
/// (axes min-max normalized first).
///
/// For each K the restarts include the previous K's centroids plus the
/// farthest point as a warm start, which makes the curve non-increasing.
pub fn elbow_curve(
    vectors: &[UrbanNetworkVector],
    k_max: usize,
    seed: u64,
) -> Result<ElbowCurve, LatentError> {
    if k_max == 0 || k_max > vectors.len() {
        return Err(LatentError::Validation(format!(
            "k_max must lie in 1..={}, got {k_max}",
            vectors.len()
        )));
    }
    let data = to_rows(vectors);
    let mut points: Vec<(usize, f64)> = Vec::with_capacity(k_max);
    let mut prev: Option<(Vec<Vec<f64>>, Vec<usize>, f64)> = None;
    for k in 1..=k_max {
        let mut best: Option<(Vec<Vec<f64>>, Vec<usize>, f64)> = None;
        for r in 0..10 {
            let mut rng = seeds::rng(seed, "kmeans", r as u64, k as u64);
            let run = lloyd(&data, kmeanspp_init(&data, k, &mut rng));
            if best.as_ref().map_or(true, |b| run.2 < b.2) {
                best = Some(run);
            }
        }
        if let Some((prev_centroids, prev_assign, _)) = &prev {
            // Warm start: previous centroids plus the farthest point.
            let mut init = prev_centroids.clone();
            let far = data
                .iter()
                .enumerate()
                .max_by(|(i, p), (j, q)| {
                    dist_sq(p, &prev_centroids[prev_assign[*i]])
                        .total_cmp(&dist_sq(q, &prev_centroids[prev_assign[*j]]))
                })
                .map(|(i, _)| i)
                .expect("data non-empty");
            init.push(data[far].clone());
            let run = lloyd(&data, init);
            if best.as_ref().map_or(true, |b| run.2 < b.2) {
                best = Some(run);
            }
        }
        let best = best.expect("at least one candidate");
        points.push((k, best.2));
        prev = Some(best);
    }

    let (suggested_k, max_chord_distance) = suggest_elbow(&points);
    Ok(ElbowCurve {
        suggested_k,
        max_chord_distance,
        low_confidence: max_chord_distance < LOW_CONFIDENCE,
        points,
    })
}

/// Kneedle-style rule: min-max normalize both axes, then take the K with
/// the largest perpendicular distance below the endpoint chord.
fn suggest_elbow(points: &[(usize, f64)]) -> (usize, f64) {
    if points.len() < 3 {
        return (points.first().map_or(1, |p| p.0), 0.0);
    }
    let (k_lo, w_hi) = (points[0].0 as f64, points[0].1);
    let (k_hi, w_lo) = (points[points.len() - 1].0 as f64, points[points.len() - 1].1);
    let k_span = k_hi - k_lo;
    let w_span = w_hi - w_lo;
    if w_span <= 0.0 {
        return (points[0].0, 0.0);
    }
    let mut best = (points[0].0, 0.0f64);
    for &(k, w) in points {
        let x = (k as f64 - k_lo) / k_span;
        let y = (w - w_lo) / w_span;
        // chord is x + y = 1; positive distance means below the chord
        let d = (1.0 - x - y) / std::f64::consts::SQRT_2;
        if d > best.1 {
            best = (k, d);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use crate::LATENT_DIM;
    use super::*;
    use rand::Rng;

    fn blob(center: &[f32], spread: f32, n: usize, id_prefix: &str, seed: u64) -> Vec<UrbanNetworkVector> {
        let mut rng = crate::seeds::rng(seed, "kmeans-test", 0, 0);
        (0..n)
            .map(|i| {
                let values: Vec<f32> = (0..LATENT_DIM)
                    .map(|d| center.get(d).copied().unwrap_or(0.0) + rng.gen_range(-spread..spread))
                    .collect();
                UrbanNetworkVector::new(format!("{id_prefix}{i:03}"), values).unwrap()
            })
            .collect()
    }

    #[test]
    fn k1_centroid_is_the_mean() {
        let vs = blob(&[1.0, -2.0], 0.5, 40, "a", 1);
        let model = kmeans(&vs, 1, 7, 3).unwrap();
        for d in 0..LATENT_DIM {
            let mean: f64 = vs.iter().map(|v| v.values()[d] as f64).sum::<f64>() / 40.0;
            assert!((model.centroids[0][d] - mean).abs() < 1e-9);
        }
        // WCSS equals total squared deviation from the mean
        let wcss: f64 = vs
            .iter()
            .map(|v| {
                v.values()
                    .iter()
                    .zip(&model.centroids[0])
                    .map(|(&x, &c)| (x as f64 - c).powi(2))
                    .sum::<f64>()
            })
            .sum();
        assert!((model.wcss - wcss).abs() < 1e-9);
    }

    #[test]
    fn k_equals_n_gives_zero_wcss() {
        let vs = blob(&[0.0], 1.0, 12, "a", 2);
        let model = kmeans(&vs, 12, 7, 3).unwrap();
        assert!(model.wcss < 1e-18);
        let mut clusters: Vec<usize> = model.assignments.iter().map(|(_, c)| *c).collect();
        clusters.sort_unstable();
        clusters.dedup();
        assert_eq!(clusters.len(), 12);
    }

    #[test]
    fn two_far_blobs_split_exactly_and_match_exhaustive_optimum() {
        let mut vs = blob(&[10.0, 10.0], 0.3, 6, "left", 3);
        vs.extend(blob(&[-10.0, -10.0], 0.3, 6, "right", 4));
        let model = kmeans(&vs, 2, 9, 10).unwrap();
        let map = model.assignment_map();
        let left = map["left000"];
        assert!(vs.iter().take(6).all(|v| map[v.city_id.as_str()] == left));
        assert!(vs.iter().skip(6).all(|v| map[v.city_id.as_str()] != left));

        // Exhaustive 2-partition oracle over 12 points confirms optimality.
        let data: Vec<Vec<f64>> = vs
            .iter()
            .map(|v| v.values().iter().map(|&x| x as f64).collect())
            .collect();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << 12) - 1 {
            let (mut a, mut b): (Vec<&Vec<f64>>, Vec<&Vec<f64>>) = (vec![], vec![]);
            for (i, p) in data.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    a.push(p);
                } else {
                    b.push(p);
                }
            }
            let cost = |group: &[&Vec<f64>]| -> f64 {
                let n = group.len() as f64;
                let dim = group[0].len();
                let mut mean = vec![0.0; dim];
                for p in group {
                    for (m, &v) in mean.iter_mut().zip(p.iter()) {
                        *m += v;
                    }
                }
                for m in &mut mean {
                    *m /= n;
                }
                group.iter().map(|p| dist_sq(p, &mean)).sum()
            };
            best = best.min(cost(&a) + cost(&b));
        }
        assert!((model.wcss - best).abs() < 1e-9 * (1.0 + best));
    }

    #[test]
    fn k_larger_than_n_is_rejected() {
        let vs = blob(&[0.0], 1.0, 5, "a", 5);
        assert!(kmeans(&vs, 6, 1, 2).is_err());
    }

    #[test]
    fn elbow_finds_three_separated_blobs() {
        let mut vs = blob(&[20.0, 0.0], 0.5, 25, "a", 6);
        vs.extend(blob(&[-20.0, 10.0], 0.5, 25, "b", 7));
        vs.extend(blob(&[0.0, -25.0], 0.5, 25, "c", 8));
        let curve = elbow_curve(&vs, 10, 11).unwrap();
        assert_eq!(curve.suggested_k, 3, "{:?}", curve.points);
        assert!(!curve.low_confidence);
        assert!(curve.max_chord_distance > 0.4, "{curve:?}");
        // curve is non-increasing by construction
        assert!(curve.points.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-9));
    }

    #[test]
    fn single_blob_is_low_confidence() {
        // One structureless blob: splitting only shaves variance along a
        // single direction of 32 per step, so the curve is nearly linear
        // and no K stands out.
        let vs = blob(&[0.0], 1.0, 200, "a", 9);
        let curve = elbow_curve(&vs, 8, 13).unwrap();
        assert!(curve.low_confidence, "{:?}", curve);
    }

    #[test]
    fn same_seed_reproduces_the_model() {
        let mut vs = blob(&[5.0], 1.0, 30, "a", 10);
        vs.extend(blob(&[-5.0], 1.0, 30, "b", 11));
        let m1 = kmeans(&vs, 3, 21, 10).unwrap();
        let m2 = kmeans(&vs, 3, 21, 10).unwrap();
        assert_eq!(m1.centroids, m2.centroids);
        assert_eq!(m1.assignments, m2.assignments);
        assert_eq!(m1.wcss, m2.wcss);
    }
}
