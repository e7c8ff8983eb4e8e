//! Bounding-box particle filter: propagate, weigh, MAP estimate, and
//! systematic resampling.
//!
//! Particle states are continuous boxes `[x, y, w, h]`; rounding to pixels
//! happens only when a box is used to crop a frame. Propagation is a
//! Gaussian random walk in position (sigma proportional to the box side)
//! with log-normal scale noise, followed by clamping into the frame with a
//! minimum side length.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Smallest box side kept after clamping, in pixels.
pub const MIN_BOX_SIDE: f64 = 8.0;

/// Axis-aligned box; `x`/`y` is the top-left corner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    /// Intersection over union; 0 for disjoint boxes.
    pub fn iou(&self, other: &BoundingBox) -> f64 {
        let x0 = self.x.max(other.x);
        let y0 = self.y.max(other.y);
        let x1 = (self.x + self.w).min(other.x + other.w);
        let y1 = (self.y + self.h).min(other.y + other.h);
        if x1 <= x0 || y1 <= y0 {
            return 0.0;
        }
        let inter = (x1 - x0) * (y1 - y0);
        inter / (self.area() + other.area() - inter)
    }

    /// Clamps the box inside a `frame_w x frame_h` frame, enforcing a
    /// minimum side (reduced if the frame itself is smaller).
    pub fn clamp_to_frame(&self, frame_w: usize, frame_h: usize) -> BoundingBox {
        let fw = frame_w as f64;
        let fh = frame_h as f64;
        let w = self.w.clamp(MIN_BOX_SIDE.min(fw), fw);
        let h = self.h.clamp(MIN_BOX_SIDE.min(fh), fh);
        BoundingBox {
            x: self.x.clamp(0.0, fw - w),
            y: self.y.clamp(0.0, fh - h),
            w,
            h,
        }
    }
}

/// Random-walk noise parameters of one tracker.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    /// Position noise sigma as a fraction of the box side.
    pub pos_sigma_frac: f64,
    /// Sigma of the log-normal per-frame scale factor.
    pub scale_sigma: f64,
}

impl Default for MotionModel {
    fn default() -> Self {
        Self {
            pos_sigma_frac: 0.05,
            scale_sigma: 0.01,
        }
    }
}

/// A weighted set of box hypotheses. Weights are kept normalized.
#[derive(Clone, Debug)]
pub struct ParticleCloud {
    particles: Vec<BoundingBox>,
    weights: Vec<f64>,
}

impl ParticleCloud {
    /// `n` copies of the initial box with uniform weights.
    pub fn init(box0: BoundingBox, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("particle count must be at least 1"));
        }
        Ok(Self {
            particles: vec![box0; n],
            weights: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[BoundingBox] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Applies motion noise to every particle and clamps it into the frame.
    /// Weights are unchanged. Draw order per particle is (dx, dy, ds), so a
    /// fixed RNG state yields a fixed cloud.
    pub fn propagate(
        &mut self,
        model: &MotionModel,
        frame_w: usize,
        frame_h: usize,
        rng: &mut (impl Rng + ?Sized),
    ) {
        for b in self.particles.iter_mut() {
            let zx: f64 = StandardNormal.sample(rng);
            let zy: f64 = StandardNormal.sample(rng);
            let zs: f64 = StandardNormal.sample(rng);
            let mut nb = *b;
            nb.x += zx * model.pos_sigma_frac * nb.w;
            nb.y += zy * model.pos_sigma_frac * nb.h;
            let s = (zs * model.scale_sigma).exp();
            let (cx, cy) = nb.center();
            nb.w *= s;
            nb.h *= s;
            nb.x = cx - nb.w / 2.0;
            nb.y = cy - nb.h / 2.0;
            *b = nb.clamp_to_frame(frame_w, frame_h);
        }
    }

    /// Sets weights proportional to `exp(score)` and normalizes.
    pub fn weigh(&mut self, scores: &[f64]) -> Result<()> {
        if scores.len() != self.particles.len() {
            return Err(Error::invalid(format!(
                "got {} scores for {} particles",
                scores.len(),
                self.particles.len()
            )));
        }
        debug_assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
        let mut total = 0.0;
        for (w, s) in self.weights.iter_mut().zip(scores.iter()) {
            *w = s.exp();
            total += *w;
        }
        for w in self.weights.iter_mut() {
            *w /= total;
        }
        Ok(())
    }

    /// The particle with maximal weight; ties break to the lowest index.
    pub fn map_estimate(&self) -> BoundingBox {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        self.particles[best]
    }

    /// Systematic resampling: `n` stratified positions `u + i/n` with
    /// `u ~ U[0, 1/n)` walked along the cumulative weights. Output weights
    /// are uniform.
    pub fn resample(&mut self, rng: &mut (impl Rng + ?Sized)) {
        let n = self.particles.len();
        let step = 1.0 / n as f64;
        let u0: f64 = rng.random_range(0.0..step);

        let mut out = Vec::with_capacity(n);
        let mut cumulative = self.weights[0];
        let mut idx = 0usize;
        for i in 0..n {
            let u = u0 + i as f64 * step;
            while u > cumulative && idx < n - 1 {
                idx += 1;
                cumulative += self.weights[idx];
            }
            out.push(self.particles[idx]);
        }
        self.particles = out;
        self.weights = vec![step; n];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h)
    }

    #[test]
    fn init_contract() {
        let c = ParticleCloud::init(bx(1.0, 2.0, 10.0, 10.0), 1).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.weights()[0], 1.0);

        let c = ParticleCloud::init(bx(1.0, 2.0, 10.0, 10.0), 200).unwrap();
        assert_eq!(c.len(), 200);
        assert!(c.particles().iter().all(|b| *b == bx(1.0, 2.0, 10.0, 10.0)));
        let sum: f64 = c.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);

        assert!(ParticleCloud::init(bx(0.0, 0.0, 1.0, 1.0), 0).is_err());
    }

    #[test]
    fn propagate_zero_noise_is_identity() {
        let model = MotionModel {
            pos_sigma_frac: 0.0,
            scale_sigma: 0.0,
        };
        let mut c = ParticleCloud::init(bx(5.0, 6.0, 20.0, 15.0), 10).unwrap();
        let mut rng = crate::Prng::seed_from_u64(0);
        c.propagate(&model, 100, 100, &mut rng);
        assert!(c.particles().iter().all(|b| *b == bx(5.0, 6.0, 20.0, 15.0)));
    }

    #[test]
    fn propagate_zero_scale_keeps_sizes() {
        let model = MotionModel {
            pos_sigma_frac: 0.1,
            scale_sigma: 0.0,
        };
        let mut c = ParticleCloud::init(bx(40.0, 40.0, 20.0, 15.0), 50).unwrap();
        let mut rng = crate::Prng::seed_from_u64(1);
        c.propagate(&model, 200, 200, &mut rng);
        assert!(c
            .particles()
            .iter()
            .all(|b| b.w == 20.0 && b.h == 15.0));
    }

    #[test]
    fn propagate_corner_box_stays_inside() {
        let model = MotionModel {
            pos_sigma_frac: 0.0,
            scale_sigma: 0.0,
        };
        let mut c = ParticleCloud::init(bx(90.0, 90.0, 10.0, 10.0), 5).unwrap();
        let mut rng = crate::Prng::seed_from_u64(2);
        c.propagate(&model, 100, 100, &mut rng);
        assert!(c.particles().iter().all(|b| *b == bx(90.0, 90.0, 10.0, 10.0)));
    }

    #[test]
    fn weigh_examples() {
        let mut c = ParticleCloud::init(bx(0.0, 0.0, 10.0, 10.0), 2).unwrap();
        c.weigh(&[0.0, 1.0]).unwrap();
        let e = std::f64::consts::E;
        assert!((c.weights()[0] - 1.0 / (1.0 + e)).abs() < 1e-12);
        assert!((c.weights()[1] - e / (1.0 + e)).abs() < 1e-12);

        let mut c = ParticleCloud::init(bx(0.0, 0.0, 10.0, 10.0), 4).unwrap();
        c.weigh(&[0.0; 4]).unwrap();
        assert!(c.weights().iter().all(|w| (w - 0.25).abs() < 1e-12));

        c.weigh(&[0.7; 4]).unwrap();
        assert!(c.weights().iter().all(|w| (w - 0.25).abs() < 1e-12));

        assert!(c.weigh(&[0.5; 3]).is_err());
    }

    #[test]
    fn map_estimate_examples() {
        let mut c = ParticleCloud::init(bx(0.0, 0.0, 10.0, 10.0), 3).unwrap();
        c.particles = vec![
            bx(0.0, 0.0, 10.0, 10.0),
            bx(1.0, 0.0, 10.0, 10.0),
            bx(2.0, 0.0, 10.0, 10.0),
        ];
        c.weights = vec![0.2, 0.5, 0.3];
        assert_eq!(c.map_estimate(), bx(1.0, 0.0, 10.0, 10.0));

        c.weights = vec![1.0 / 3.0; 3];
        assert_eq!(c.map_estimate(), bx(0.0, 0.0, 10.0, 10.0));

        let single = ParticleCloud::init(bx(3.0, 3.0, 9.0, 9.0), 1).unwrap();
        assert_eq!(single.map_estimate(), bx(3.0, 3.0, 9.0, 9.0));
    }

    #[test]
    fn resample_degenerate_weight_copies_winner() {
        let mut c = ParticleCloud::init(bx(0.0, 0.0, 10.0, 10.0), 4).unwrap();
        c.particles = vec![
            bx(0.0, 0.0, 10.0, 10.0),
            bx(50.0, 0.0, 10.0, 10.0),
            bx(0.0, 50.0, 10.0, 10.0),
            bx(50.0, 50.0, 10.0, 10.0),
        ];
        c.weights = vec![0.0, 0.0, 1.0, 0.0];
        let mut rng = crate::Prng::seed_from_u64(3);
        c.resample(&mut rng);
        assert!(c.particles().iter().all(|b| *b == bx(0.0, 50.0, 10.0, 10.0)));
        assert!(c.weights().iter().all(|w| (w - 0.25).abs() < 1e-12));
    }

    #[test]
    fn resample_uniform_weights_preserves_multiset() {
        let boxes: Vec<BoundingBox> = (0..8).map(|i| bx(i as f64, 0.0, 10.0, 10.0)).collect();
        let mut c = ParticleCloud::init(boxes[0], 8).unwrap();
        c.particles = boxes.clone();
        c.weights = vec![1.0 / 8.0; 8];
        let mut rng = crate::Prng::seed_from_u64(4);
        c.resample(&mut rng);
        // With uniform weights every stratum selects exactly one particle.
        let mut xs: Vec<f64> = c.particles().iter().map(|b| b.x).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(xs, (0..8).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn resample_counts_track_weights() {
        // Monte Carlo check of unbiasedness: E[count_i] = n * w_i.
        let weights = [0.05, 0.1, 0.2, 0.25, 0.4];
        let n = 5;
        let rounds = 2000;
        let mut counts = [0usize; 5];
        let mut rng = crate::Prng::seed_from_u64(5);
        for _ in 0..rounds {
            let mut c = ParticleCloud::init(bx(0.0, 0.0, 10.0, 10.0), n).unwrap();
            c.particles = (0..n).map(|i| bx(i as f64, 0.0, 10.0, 10.0)).collect();
            c.weights = weights.to_vec();
            c.resample(&mut rng);
            for b in c.particles() {
                counts[b.x as usize] += 1;
            }
        }
        let draws = (rounds * n) as f64;
        for (i, &w) in weights.iter().enumerate() {
            let expected = draws * w;
            let sigma = (draws * w * (1.0 - w)).sqrt();
            let diff = (counts[i] as f64 - expected).abs();
            assert!(
                diff <= 3.0 * sigma,
                "particle {i}: count {} expected {expected} (3 sigma {})",
                counts[i],
                3.0 * sigma
            );
        }
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        assert_eq!(a.iou(&a), 1.0);
        assert_eq!(a.iou(&bx(20.0, 20.0, 5.0, 5.0)), 0.0);
        let half = bx(5.0, 0.0, 10.0, 10.0);
        assert!((a.iou(&half) - 1.0 / 3.0).abs() < 1e-12);
        // Touching edges do not intersect.
        assert_eq!(a.iou(&bx(10.0, 0.0, 10.0, 10.0)), 0.0);
    }

    #[test]
    fn filter_step_is_deterministic_under_seed() {
        let run = || {
            let mut c = ParticleCloud::init(bx(30.0, 30.0, 20.0, 20.0), 64).unwrap();
            let mut rng = crate::Prng::seed_from_u64(99);
            let model = MotionModel::default();
            c.propagate(&model, 200, 200, &mut rng);
            let scores: Vec<f64> = (0..64).map(|i| (i % 7) as f64 / 7.0).collect();
            c.weigh(&scores).unwrap();
            let est = c.map_estimate();
            c.resample(&mut rng);
            (est, c.particles().to_vec())
        };
        let (e1, p1) = run();
        let (e2, p2) = run();
        assert_eq!(e1, e2);
        assert_eq!(p1, p2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn propagate_keeps_boxes_in_frame(
            seed in 0u64..1000,
            frac in 0.0f64..0.5,
            scale in 0.0f64..0.2,
        ) {
            let model = MotionModel { pos_sigma_frac: frac, scale_sigma: scale };
            let mut c = ParticleCloud::init(bx(10.0, 10.0, 30.0, 30.0), 32).unwrap();
            let mut rng = crate::Prng::seed_from_u64(seed);
            for _ in 0..5 {
                c.propagate(&model, 120, 90, &mut rng);
            }
            prop_assert_eq!(c.len(), 32);
            for b in c.particles() {
                prop_assert!(b.x >= 0.0 && b.y >= 0.0);
                prop_assert!(b.x + b.w <= 120.0 + 1e-9);
                prop_assert!(b.y + b.h <= 90.0 + 1e-9);
                prop_assert!(b.w >= MIN_BOX_SIDE && b.h >= MIN_BOX_SIDE);
            }
        }

        #[test]
        fn weights_stay_normalized(scores in proptest::collection::vec(0.0f64..1.0, 1..64)) {
            let mut c = ParticleCloud::init(bx(0.0, 0.0, 10.0, 10.0), scores.len()).unwrap();
            c.weigh(&scores).unwrap();
            let sum: f64 = c.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
            prop_assert!(c.weights().iter().all(|w| *w >= 0.0));
            let mut rng = crate::Prng::seed_from_u64(1);
            c.resample(&mut rng);
            let sum: f64 = c.weights().iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }

        #[test]
        fn iou_symmetric_bounded(
            ax in 0.0f64..50.0, ay in 0.0f64..50.0, aw in 1.0f64..30.0, ah in 1.0f64..30.0,
            bx_ in 0.0f64..50.0, by in 0.0f64..50.0, bw in 1.0f64..30.0, bh in 1.0f64..30.0,
        ) {
            let a = bx(ax, ay, aw, ah);
            let b = bx(bx_, by, bw, bh);
            let ab = a.iou(&b);
            prop_assert_eq!(ab, b.iou(&a));
            prop_assert!((0.0..=1.0).contains(&ab));
        }
    }
}
