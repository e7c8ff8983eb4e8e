//! Best-buddies similarity between point sets and set-size equalization.
//!
//! A pair `(p, q)` is a best-buddies pair when each point is the other's
//! nearest neighbor in the opposite set. The score is the number of such
//! pairs divided by the size of the smaller set. Because the raw score is
//! biased upward when one set outgrows the other, two equalization
//! strategies are provided: uniform random sampling of `K` points from both
//! sets, and clustering the larger set down to the smaller set's size.

use crate::embedding::{distance_sq, FeaturePoint, PointSet};
use crate::error::{Error, Result};
use crate::kmeans::kmeans;
use rand::Rng;

/// Score of one BBS evaluation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BbsScore {
    /// `pair_count / normalizer`, in `[0, 1]`.
    pub value: f64,
    /// Number of best-buddies pairs found.
    pub pair_count: usize,
    /// `min(|P|, |Q|)`.
    pub normalizer: usize,
}

/// How to equalize two point sets before scoring.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EqualizationStrategy {
    /// Score the sets as given.
    None,
    /// Uniformly sample `K` points (without replacement) from both sets.
    RandomSample(usize),
    /// Replace the larger set by k-means centers, k = size of the smaller.
    Cluster,
}

/// Index of the nearest neighbor of `p` in `q_set`; ties break to the
/// lowest index.
pub fn nearest_neighbor(p: &FeaturePoint, q_set: &PointSet, lambda: f64) -> Result<usize> {
    if q_set.is_empty() {
        return Err(Error::invalid("nearest neighbor of an empty set"));
    }
    if q_set.dim() != Some(p.appearance.len()) {
        return Err(Error::invalid("appearance dimensionality mismatch"));
    }
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, q) in q_set.points().iter().enumerate() {
        let d = distance_sq(p, q, lambda);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    Ok(best)
}

/// Computes BBS between two nonempty sets of equal dimensionality.
///
/// Builds the full pairwise distance matrix once and derives both
/// nearest-neighbor directions from it. All ties break to the lowest index,
/// which makes the result exactly reproducible.
pub fn compute_bbs(p_set: &PointSet, q_set: &PointSet, lambda: f64) -> Result<BbsScore> {
    if p_set.is_empty() || q_set.is_empty() {
        return Err(Error::invalid("BBS of an empty point set"));
    }
    if p_set.dim() != q_set.dim() {
        return Err(Error::invalid(format!(
            "appearance dimensionality mismatch: {:?} vs {:?}",
            p_set.dim(),
            q_set.dim()
        )));
    }

    let n = p_set.len();
    let m = q_set.len();
    let ps = p_set.points();
    let qs = q_set.points();

    // nn_pq[i]: argmin_j d(p_i, q_j); col_min tracks argmin_i per column.
    let mut nn_pq = vec![0usize; n];
    let mut nn_qp = vec![0usize; m];
    let mut col_min = vec![f64::INFINITY; m];
    for (i, p) in ps.iter().enumerate() {
        let mut row_best = 0usize;
        let mut row_min = f64::INFINITY;
        for (j, q) in qs.iter().enumerate() {
            let d = distance_sq(p, q, lambda);
            if d < row_min {
                row_min = d;
                row_best = j;
            }
            if d < col_min[j] {
                col_min[j] = d;
                nn_qp[j] = i;
            }
        }
        nn_pq[i] = row_best;
    }

    let pair_count = nn_pq
        .iter()
        .enumerate()
        .filter(|&(i, &j)| nn_qp[j] == i)
        .count();
    let normalizer = n.min(m);
    Ok(BbsScore {
        value: pair_count as f64 / normalizer as f64,
        pair_count,
        normalizer,
    })
}

/// Uniformly samples `k` points without replacement from each set.
/// Deterministic for a fixed RNG state; `P` is sampled before `Q`.
pub fn equalize_random(
    p_set: &PointSet,
    q_set: &PointSet,
    k: usize,
    rng: &mut (impl Rng + ?Sized),
) -> Result<(PointSet, PointSet)> {
    let max_k = p_set.len().min(q_set.len());
    if k == 0 || k > max_k {
        return Err(Error::invalid(format!(
            "sample size {k} out of range 1..={max_k}"
        )));
    }
    let pi = rand::seq::index::sample(rng, p_set.len(), k).into_vec();
    let qi = rand::seq::index::sample(rng, q_set.len(), k).into_vec();
    Ok((p_set.select(&pi), q_set.select(&qi)))
}

/// Replaces the larger set by k-means centers so both sets have the size of
/// the smaller one; equal-size inputs pass through unchanged.
pub fn equalize_cluster(
    p_set: &PointSet,
    q_set: &PointSet,
    lambda: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<(PointSet, PointSet)> {
    if p_set.is_empty() || q_set.is_empty() {
        return Err(Error::invalid("cannot equalize an empty point set"));
    }
    if p_set.len() == q_set.len() {
        return Ok((p_set.clone(), q_set.clone()));
    }
    if p_set.len() > q_set.len() {
        let centers = kmeans(p_set.points(), q_set.len(), lambda, rng);
        Ok((PointSet::new(centers)?, q_set.clone()))
    } else {
        let centers = kmeans(q_set.points(), p_set.len(), lambda, rng);
        Ok((p_set.clone(), PointSet::new(centers)?))
    }
}

/// Applies an equalization strategy, then scores the resulting sets.
pub fn bbs_with_strategy(
    p_set: &PointSet,
    q_set: &PointSet,
    strategy: EqualizationStrategy,
    lambda: f64,
    rng: &mut (impl Rng + ?Sized),
) -> Result<BbsScore> {
    match strategy {
        EqualizationStrategy::None => compute_bbs(p_set, q_set, lambda),
        EqualizationStrategy::RandomSample(k) => {
            let (p, q) = equalize_random(p_set, q_set, k, rng)?;
            compute_bbs(&p, &q, lambda)
        }
        EqualizationStrategy::Cluster => {
            let (p, q) = equalize_cluster(p_set, q_set, lambda, rng)?;
            compute_bbs(&p, &q, lambda)
        }
    }
}
