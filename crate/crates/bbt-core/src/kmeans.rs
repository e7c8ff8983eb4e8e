//! K-means over feature points with the joint appearance–location distance.
//!
//! Used by the clustering equalization strategy: the larger point set is
//! replaced by cluster centers so both sets end up the same size. Seeding is
//! k-means++ and iteration stops on unchanged assignments or after a fixed
//! cap. Centers are synthetic points (coordinate-wise means), not data
//! points.

use crate::embedding::{distance_sq, FeaturePoint};
use rand::Rng;

pub const MAX_ITERATIONS: usize = 50;

/// Runs k-means++ with the `lambda`-weighted distance. Requires
/// `1 <= k <= points.len()` and a nonempty input; callers uphold this.
pub fn kmeans(
    points: &[FeaturePoint],
    k: usize,
    lambda: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Vec<FeaturePoint> {
    assert!(k >= 1 && k <= points.len());
    let mut centers = seed_plus_plus(points, k, lambda, rng);
    let mut assignments = vec![usize::MAX; points.len()];

    for _ in 0..MAX_ITERATIONS {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = distance_sq(p, center, lambda);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            if assignments[i] != best {
                assignments[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        recompute_centers(points, &assignments, &mut centers, lambda);
    }
    centers
}

fn seed_plus_plus(
    points: &[FeaturePoint],
    k: usize,
    lambda: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Vec<FeaturePoint> {
    let mut centers = Vec::with_capacity(k);
    let first = rng.random_range(0..points.len());
    centers.push(points[first].clone());

    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| distance_sq(p, &centers[0], lambda))
        .collect();

    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            // Sample an index proportionally to its squared distance.
            let mut target = rng.random_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if target < w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            // All remaining mass is zero (duplicate points); any pick works.
            rng.random_range(0..points.len())
        };
        let center = points[next].clone();
        for (i, p) in points.iter().enumerate() {
            let d = distance_sq(p, &center, lambda);
            if d < d2[i] {
                d2[i] = d;
            }
        }
        centers.push(center);
    }
    centers
}

fn recompute_centers(
    points: &[FeaturePoint],
    assignments: &[usize],
    centers: &mut [FeaturePoint],
    lambda: f64,
) {
    let dim = points[0].appearance.len();
    let k = centers.len();
    let mut sums = vec![vec![0.0f64; dim]; k];
    let mut loc_sums = vec![[0.0f64; 2]; k];
    let mut counts = vec![0usize; k];

    for (p, &a) in points.iter().zip(assignments.iter()) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p.appearance.iter()) {
            *s += v;
        }
        loc_sums[a][0] += p.location[0];
        loc_sums[a][1] += p.location[1];
    }

    let mut stolen = vec![false; points.len()];
    for c in 0..k {
        if counts[c] == 0 {
            // Re-seed an empty cluster with the point farthest from its
            // current center, scanned in index order for determinism.
            let (mut far_i, mut far_d) = (0usize, -1.0f64);
            for (i, p) in points.iter().enumerate() {
                if stolen[i] || counts[assignments[i]] <= 1 {
                    continue;
                }
                let d = distance_sq(p, &centers[assignments[i]], lambda);
                if d > far_d {
                    far_d = d;
                    far_i = i;
                }
            }
            stolen[far_i] = true;
            centers[c] = points[far_i].clone();
            continue;
        }
        let n = counts[c] as f64;
        for (s, v) in centers[c].appearance.iter_mut().zip(sums[c].iter()) {
            *s = v / n;
        }
        centers[c].location = [loc_sums[c][0] / n, loc_sums[c][1] / n];
    }
}
