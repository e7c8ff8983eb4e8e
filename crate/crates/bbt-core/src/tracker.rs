//! The single-tracker loop: multi-template bag-of-points matching inside
//! the particle filter, forward-backward confidence, and the gated template
//! and reference-frame updates.
//!
//! Per frame: particles are propagated, each particle's crop is embedded
//! and scored against a bag of points built from evenly spaced buffered
//! templates (both sets randomly sampled down to a common size first), the
//! MAP particle becomes the new target state, a backward check against the
//! reference frame produces a confidence score, the update rules run, and
//! the cloud is resampled.

use crate::bbs::{bbs_with_strategy, EqualizationStrategy};
use crate::embedding::{embed_region, PointSet};
use crate::error::{Error, Result};
use crate::particle_filter::{BoundingBox, MotionModel, ParticleCloud};
use crate::region::ImageRegion;
use crate::Prng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// All scalar knobs of one tracker.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Patch side length `k`; points live in `k^2 * d + 2` dimensions.
    pub patch_size: usize,
    /// Weight of the squared location distance.
    pub lambda: f64,
    /// Template buffer capacity `L`.
    pub buffer_capacity: usize,
    /// Templates `l` used per frame, evenly spaced over the buffer.
    pub templates_per_frame: usize,
    /// Confidence threshold and window for template updates.
    pub gamma1: f64,
    pub f1: usize,
    /// Confidence threshold and window for reference-frame updates.
    pub gamma2: f64,
    pub f2: usize,
    pub n_particles: usize,
    /// Cap on the number of points sampled from each set before scoring.
    pub sample_cap: usize,
    pub motion: MotionModel,
    /// Backward-check grid: offsets are multiples of `fb_radius_frac` times
    /// the reference box side, `(2 * fb_steps + 1)^2` candidates total.
    pub fb_radius_frac: f64,
    pub fb_steps: usize,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            patch_size: 3,
            lambda: 2.0,
            buffer_capacity: 30,
            templates_per_frame: 5,
            gamma1: 0.6,
            f1: 5,
            gamma2: 0.5,
            f2: 9,
            n_particles: 200,
            sample_cap: 300,
            motion: MotionModel::default(),
            fb_radius_frac: 0.1,
            fb_steps: 2,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size == 0 {
            return Err(Error::invalid("patch_size must be at least 1"));
        }
        if !self.lambda.is_finite() || self.lambda < 0.0 {
            return Err(Error::invalid("lambda must be a nonnegative real"));
        }
        if self.buffer_capacity == 0 {
            return Err(Error::invalid("buffer_capacity must be at least 1"));
        }
        if self.templates_per_frame == 0 || self.templates_per_frame > self.buffer_capacity {
            return Err(Error::invalid(
                "templates_per_frame must be in 1..=buffer_capacity",
            ));
        }
        for (name, g) in [("gamma1", self.gamma1), ("gamma2", self.gamma2)] {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::invalid(format!("{name} must be in [0, 1]")));
            }
        }
        if self.f1 == 0 || self.f2 == 0 {
            return Err(Error::invalid("f1 and f2 must be at least 1"));
        }
        if self.n_particles == 0 {
            return Err(Error::invalid("n_particles must be at least 1"));
        }
        if self.sample_cap == 0 {
            return Err(Error::invalid("sample_cap must be at least 1"));
        }
        if self.motion.pos_sigma_frac < 0.0 || self.motion.scale_sigma < 0.0 {
            return Err(Error::invalid("motion sigmas must be nonnegative"));
        }
        if self.fb_radius_frac < 0.0 {
            return Err(Error::invalid("fb_radius_frac must be nonnegative"));
        }
        Ok(())
    }
}

/// FIFO of template regions with the first entry pinned.
#[derive(Clone, Debug)]
pub struct TemplateBuffer {
    entries: Vec<ImageRegion>,
    capacity: usize,
}

impl TemplateBuffer {
    pub fn new(first: ImageRegion, capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::invalid("buffer capacity must be at least 1"));
        }
        Ok(Self {
            entries: vec![first],
            capacity,
        })
    }

    /// Appends a template, evicting the oldest non-pinned entry when full.
    /// With capacity 1 only the pinned first template is kept.
    pub fn push(&mut self, region: ImageRegion) {
        if self.capacity == 1 {
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.remove(1);
        }
        self.entries.push(region);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, index: usize) -> &ImageRegion {
        &self.entries[index]
    }
}

/// Consecutive-confidence gate behind the template and reference updates.
///
/// A pending candidate opens at the first frame whose confidence clears the
/// threshold and commits `window` frames later if every confidence in
/// between also cleared it. Any dip drops the pending candidate. With
/// `enforce_cooldown`, a commit is additionally blocked unless at least
/// `window` frames have passed since the previous commit.
#[derive(Clone, Debug)]
pub struct UpdateRule<T> {
    threshold: f64,
    window: usize,
    enforce_cooldown: bool,
    pending: Option<(T, usize)>,
    frames_since_commit: usize,
}

impl<T> UpdateRule<T> {
    pub fn new(threshold: f64, window: usize, enforce_cooldown: bool) -> Self {
        Self {
            threshold,
            window,
            enforce_cooldown,
            pending: None,
            frames_since_commit: 0,
        }
    }

    /// Feeds one frame's confidence. `candidate` is evaluated only when a
    /// new pending window opens. Returns the payload on commit.
    pub fn observe(
        &mut self,
        frame_index: usize,
        confidence: f64,
        candidate: impl FnOnce() -> T,
    ) -> Option<T> {
        self.frames_since_commit += 1;
        if confidence < self.threshold {
            self.pending = None;
            return None;
        }
        match self.pending.take() {
            None => {
                self.pending = Some((candidate(), frame_index));
                None
            }
            Some((payload, start)) => {
                if frame_index - start < self.window {
                    self.pending = Some((payload, start));
                    None
                } else if !self.enforce_cooldown || self.frames_since_commit >= self.window {
                    self.frames_since_commit = 0;
                    Some(payload)
                } else {
                    None
                }
            }
        }
    }

    pub fn pending_start(&self) -> Option<usize> {
        self.pending.as_ref().map(|(_, s)| *s)
    }
}

/// A trusted past frame and the target's box in it.
#[derive(Clone, Debug)]
pub struct ReferenceFrame {
    pub image: ImageRegion,
    pub bbox: BoundingBox,
    pub frame_index: usize,
}

/// Full state of a single tracker.
pub struct TrackerState {
    buffer: TemplateBuffer,
    cloud: ParticleCloud,
    reference: ReferenceFrame,
    confidence_history: Vec<f64>,
    template_rule: UpdateRule<ImageRegion>,
    reference_rule: UpdateRule<ReferenceFrame>,
    frames_processed: usize,
}

impl TrackerState {
    /// Initializes from the first frame and its target box. The box is
    /// clamped into the frame; frame 0's confidence is defined as 1.
    pub fn new(frame0: &ImageRegion, box0: BoundingBox, config: &TrackerConfig) -> Result<Self> {
        config.validate()?;
        let k = config.patch_size;
        if frame0.width() < k || frame0.height() < k {
            return Err(Error::invalid("first frame is smaller than the patch size"));
        }
        let box0 = box0.clamp_to_frame(frame0.width(), frame0.height());
        let t0 = frame0.crop(box0.x, box0.y, box0.w, box0.h)?;
        Ok(Self {
            buffer: TemplateBuffer::new(t0, config.buffer_capacity)?,
            cloud: ParticleCloud::init(box0, config.n_particles)?,
            reference: ReferenceFrame {
                image: frame0.clone(),
                bbox: box0,
                frame_index: 0,
            },
            confidence_history: vec![1.0],
            template_rule: UpdateRule::new(config.gamma1, config.f1, true),
            reference_rule: UpdateRule::new(config.gamma2, config.f2, false),
            frames_processed: 0,
        })
    }

    pub fn buffer(&self) -> &TemplateBuffer {
        &self.buffer
    }

    pub fn reference(&self) -> &ReferenceFrame {
        &self.reference
    }

    pub fn confidence_history(&self) -> &[f64] {
        &self.confidence_history
    }

    pub fn frames_processed(&self) -> usize {
        self.frames_processed
    }

    /// Processes one frame and returns the new target box and the
    /// forward-backward confidence. On error the state is left unchanged so
    /// the tracker can continue on the next frame.
    pub fn track_frame(
        &mut self,
        frame: &ImageRegion,
        config: &TrackerConfig,
        rng: &mut (impl Rng + ?Sized),
    ) -> Result<(BoundingBox, f64)> {
        let k = config.patch_size;
        if frame.width() < k || frame.height() < k {
            return Err(Error::Frame(format!(
                "frame {}x{} is smaller than the patch size {}",
                frame.width(),
                frame.height(),
                k
            )));
        }
        let t = self.frames_processed + 1;

        let mut cloud = self.cloud.clone();
        cloud.propagate(&config.motion, frame.width(), frame.height(), rng);

        // Templates are resized to the average particle size so their
        // location grids line up with the candidates'.
        let mut avg_w = 0.0;
        let mut avg_h = 0.0;
        for (b, w) in cloud.particles().iter().zip(cloud.weights()) {
            avg_w += b.w * w;
            avg_h += b.h * w;
        }
        let target_w = (avg_w.round() as usize).max(k);
        let target_h = (avg_h.round() as usize).max(k);
        let bag = build_template_bag(
            &self.buffer,
            config.templates_per_frame,
            target_w,
            target_h,
            k,
        )?;

        // Per-particle seeds are drawn up front so the parallel evaluation
        // is deterministic.
        let seeds: Vec<u64> = (0..cloud.len()).map(|_| rng.random()).collect();
        let scores: Vec<f64> = cloud
            .particles()
            .par_iter()
            .zip(seeds.par_iter())
            .map(|(b, &seed)| -> Result<f64> {
                let mut prng = Prng::seed_from_u64(seed);
                let crop = frame
                    .crop(b.x, b.y, b.w, b.h)
                    .map_err(|e| Error::Frame(format!("particle crop failed: {e}")))?;
                let candidate = embed_region(&crop, k)
                    .map_err(|e| Error::Frame(format!("particle embedding failed: {e}")))?;
                let k_eff = config.sample_cap.min(bag.len()).min(candidate.len());
                let score = bbs_with_strategy(
                    &bag,
                    &candidate,
                    EqualizationStrategy::RandomSample(k_eff),
                    config.lambda,
                    &mut prng,
                )
                .map_err(|e| Error::Frame(format!("particle scoring failed: {e}")))?;
                Ok(score.value)
            })
            .collect::<Result<Vec<f64>>>()?;

        cloud.weigh(&scores)?;
        let x_t = cloud.map_estimate();
        let t_cur = frame
            .crop(x_t.x, x_t.y, x_t.w, x_t.h)
            .map_err(|e| Error::Frame(format!("target crop failed: {e}")))?;

        let fb_seed: u64 = rng.random();
        let mut fb_rng = Prng::seed_from_u64(fb_seed);
        let conf = forward_backward_confidence(&t_cur, &self.reference, config, &mut fb_rng)?;

        // Everything below is infallible; the state commits atomically.
        self.confidence_history.push(conf);
        if let Some(region) = self.template_rule.observe(t, conf, || t_cur.clone()) {
            self.buffer.push(region);
        }
        let reference_candidate = || ReferenceFrame {
            image: frame.clone(),
            bbox: x_t,
            frame_index: t,
        };
        if let Some(reference) = self.reference_rule.observe(t, conf, reference_candidate) {
            self.reference = reference;
        }
        cloud.resample(rng);
        self.cloud = cloud;
        self.frames_processed = t;
        Ok((x_t, conf))
    }
}

/// Evenly spaced buffer indices, always containing 0 and `len - 1`.
/// Duplicates from rounding are collapsed; `count = 1` degenerates to the
/// pinned first template.
pub fn template_indices(len: usize, count: usize) -> Vec<usize> {
    assert!(len >= 1 && count >= 1);
    if len == 1 || count == 1 {
        return vec![0];
    }
    let mut indices = Vec::with_capacity(count);
    for i in 0..count {
        let idx = (i as f64 * (len - 1) as f64 / (count - 1) as f64).round() as usize;
        if indices.last() != Some(&idx) {
            indices.push(idx);
        }
    }
    indices
}

/// Resizes `count` evenly spaced buffered templates to the target size,
/// embeds each, and concatenates all points into one bag.
pub fn build_template_bag(
    buffer: &TemplateBuffer,
    count: usize,
    target_w: usize,
    target_h: usize,
    k: usize,
) -> Result<PointSet> {
    if target_w < k || target_h < k {
        return Err(Error::invalid(format!(
            "bag target {target_w}x{target_h} is smaller than the patch size {k}"
        )));
    }
    let mut points = Vec::new();
    for idx in template_indices(buffer.len(), count) {
        let resized = buffer.get(idx).resize(target_w, target_h)?;
        let set = embed_region(&resized, k)?;
        points.extend_from_slice(set.points());
    }
    PointSet::new(points)
}

/// Backward check: the current target appearance is matched against crops
/// of the reference frame on a grid around the reference box; the result is
/// the IoU between the best-matching grid box and the reference box.
/// Returns 0 when every grid candidate is degenerate.
pub fn forward_backward_confidence(
    t_cur: &ImageRegion,
    reference: &ReferenceFrame,
    config: &TrackerConfig,
    rng: &mut (impl Rng + ?Sized),
) -> Result<f64> {
    let k = config.patch_size;
    let rb = reference.bbox;
    let rw = rb.w.round().max(1.0) as usize;
    let rh = rb.h.round().max(1.0) as usize;
    if rw < k || rh < k {
        return Ok(0.0);
    }
    let resized = t_cur.resize(rw, rh)?;
    let p_set = embed_region(&resized, k)?;

    let steps = config.fb_steps as i64;
    let mut best: Option<(f64, BoundingBox)> = None;
    for dy in -steps..=steps {
        for dx in -steps..=steps {
            let candidate = BoundingBox::new(
                rb.x + dx as f64 * config.fb_radius_frac * rb.w,
                rb.y + dy as f64 * config.fb_radius_frac * rb.h,
                rb.w,
                rb.h,
            )
            .clamp_to_frame(reference.image.width(), reference.image.height());
            let crop = reference
                .image
                .crop(candidate.x, candidate.y, candidate.w, candidate.h)?;
            if crop.width() < k || crop.height() < k {
                continue;
            }
            let q_set = embed_region(&crop, k)?;
            let k_eff = config.sample_cap.min(p_set.len()).min(q_set.len());
            let score = bbs_with_strategy(
                &p_set,
                &q_set,
                EqualizationStrategy::RandomSample(k_eff),
                config.lambda,
                rng,
            )?;
            if best.as_ref().is_none_or(|(b, _)| score.value > *b) {
                best = Some((score.value, candidate));
            }
        }
    }
    Ok(best.map_or(0.0, |(_, b)| b.iou(&rb)))
}
