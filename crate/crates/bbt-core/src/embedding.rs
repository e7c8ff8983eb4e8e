//! Embedding of image regions into the joint appearance–location space.
//!
//! A region is broken into a non-overlapping grid of `k x k` patches. Each
//! patch becomes one point: its appearance is the patch's `k^2 * d` pixel
//! values (row-major, channel-interleaved) and its location is the patch
//! center normalized to `[0, 1]` within the region. Distances between points
//! are squared-Euclidean in appearance plus `lambda` times squared-Euclidean
//! in location.

use crate::error::{Error, Result};
use crate::region::ImageRegion;

/// One patch embedded as a point: `k^2 * d` appearance values plus a
/// normalized 2D location.
#[derive(Clone, Debug, PartialEq)]
pub struct FeaturePoint {
    pub appearance: Vec<f64>,
    pub location: [f64; 2],
}

/// An ordered collection of points sharing one appearance dimensionality.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointSet {
    points: Vec<FeaturePoint>,
}

impl PointSet {
    /// Builds a set, checking that all points share one dimensionality.
    pub fn new(points: Vec<FeaturePoint>) -> Result<Self> {
        if let Some(first) = points.first() {
            let dim = first.appearance.len();
            if points.iter().any(|p| p.appearance.len() != dim) {
                return Err(Error::invalid(
                    "point set has mixed appearance dimensionalities",
                ));
            }
        }
        Ok(Self { points })
    }

    pub fn empty() -> Self {
        Self { points: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Appearance dimensionality, or `None` for an empty set.
    pub fn dim(&self) -> Option<usize> {
        self.points.first().map(|p| p.appearance.len())
    }

    pub fn points(&self) -> &[FeaturePoint] {
        &self.points
    }

    /// Subset by indices (used by the equalization strategies).
    pub fn select(&self, indices: &[usize]) -> PointSet {
        PointSet {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
        }
    }
}

/// Squared distance without validation; callers check dimensionality once.
#[inline]
pub(crate) fn distance_sq(p: &FeaturePoint, q: &FeaturePoint, lambda: f64) -> f64 {
    let mut app = 0.0;
    for (a, b) in p.appearance.iter().zip(q.appearance.iter()) {
        let d = a - b;
        app += d * d;
    }
    let dx = p.location[0] - q.location[0];
    let dy = p.location[1] - q.location[1];
    app + lambda * (dx * dx + dy * dy)
}

/// Distance between two points: squared appearance distance plus `lambda`
/// times squared location distance.
pub fn point_distance(p: &FeaturePoint, q: &FeaturePoint, lambda: f64) -> Result<f64> {
    if p.appearance.len() != q.appearance.len() {
        return Err(Error::invalid(format!(
            "appearance dimensionality mismatch: {} vs {}",
            p.appearance.len(),
            q.appearance.len()
        )));
    }
    Ok(distance_sq(p, q, lambda))
}

/// Embeds a region as `floor(w/k) * floor(h/k)` points over a non-overlapping
/// `k x k` grid anchored at the top-left corner; trailing remainder rows and
/// columns are dropped. Patch order is row-major over the grid.
pub fn embed_region(region: &ImageRegion, k: usize) -> Result<PointSet> {
    if k == 0 {
        return Err(Error::invalid("patch size must be at least 1"));
    }
    if region.width() < k || region.height() < k {
        return Err(Error::invalid(format!(
            "region {}x{} is smaller than patch size {}",
            region.width(),
            region.height(),
            k
        )));
    }
    let cols = region.width() / k;
    let rows = region.height() / k;
    let d = region.channels();
    let norm = |center: f64, extent: usize| -> f64 {
        if extent > 1 {
            center / (extent - 1) as f64
        } else {
            0.5
        }
    };

    let mut points = Vec::with_capacity(cols * rows);
    for row in 0..rows {
        for col in 0..cols {
            let px = col * k;
            let py = row * k;
            let mut appearance = Vec::with_capacity(k * k * d);
            for dy in 0..k {
                for dx in 0..k {
                    for c in 0..d {
                        appearance.push(region.get(px + dx, py + dy, c));
                    }
                }
            }
            let cx = px as f64 + (k as f64 - 1.0) / 2.0;
            let cy = py as f64 + (k as f64 - 1.0) / 2.0;
            points.push(FeaturePoint {
                appearance,
                location: [norm(cx, region.width()), norm(cy, region.height())],
            });
        }
    }
    PointSet::new(points)
}
