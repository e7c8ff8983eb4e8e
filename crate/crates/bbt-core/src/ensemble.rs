//! An ensemble of independent trackers with different scale parameters,
//! fused per frame by a selection rule.
//!
//! Trackers never exchange state; fusion only sees their output boxes and
//! confidences. The default rule scores each candidate by its agreement
//! with the other candidates (pairwise IoU), temporal smoothness against
//! the previously fused box, and its own confidence, then selects the
//! argmax. Fusion always returns one of the candidate boxes, never an
//! average.

use crate::error::{Error, Result};
use crate::particle_filter::BoundingBox;
use crate::region::ImageRegion;
use crate::tracker::{TrackerConfig, TrackerState};
use crate::Prng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// One tracker's output for a frame, as seen by fusion.
#[derive(Clone, Copy, Debug)]
pub struct FusionCandidate {
    pub bbox: BoundingBox,
    pub confidence: f64,
    pub tracker_index: usize,
}

/// A pluggable per-frame fusion rule; returns an index into `candidates`.
pub trait FusionRule: Send + Sync {
    fn fuse(&self, candidates: &[FusionCandidate], previous: Option<&BoundingBox>) -> usize;
}

/// score(c) = sum of IoU against the other candidates
///          + alpha * IoU(c, previous fused box)
///          + beta * confidence(c),
/// ties broken by the lowest tracker index.
#[derive(Clone, Copy, Debug)]
pub struct AgreementFusion {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for AgreementFusion {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl FusionRule for AgreementFusion {
    fn fuse(&self, candidates: &[FusionCandidate], previous: Option<&BoundingBox>) -> usize {
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, c) in candidates.iter().enumerate() {
            let mut score = 0.0;
            for (j, other) in candidates.iter().enumerate() {
                if i != j {
                    score += c.bbox.iou(&other.bbox);
                }
            }
            if let Some(prev) = previous {
                score += self.alpha * c.bbox.iou(prev);
            }
            score += self.beta * c.confidence;
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        best
    }
}

/// Fuses one frame's candidates with the default rule.
pub fn fuse_frame(
    candidates: &[(BoundingBox, f64)],
    previous: Option<&BoundingBox>,
) -> Result<BoundingBox> {
    if candidates.is_empty() {
        return Err(Error::invalid("fusion needs at least one candidate"));
    }
    let cs: Vec<FusionCandidate> = candidates
        .iter()
        .enumerate()
        .map(|(i, &(bbox, confidence))| FusionCandidate {
            bbox,
            confidence,
            tracker_index: i,
        })
        .collect();
    let idx = AgreementFusion::default().fuse(&cs, previous);
    Ok(cs[idx].bbox)
}

/// Ensemble configuration: one base tracker configuration plus the scale
/// parameter of each ensemble member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub tracker: TrackerConfig,
    pub scales: Vec<f64>,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            tracker: TrackerConfig::default(),
            scales: vec![0.0, 0.0, 0.01, 0.03],
        }
    }
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        self.tracker.validate()?;
        if self.scales.is_empty() {
            return Err(Error::invalid("ensemble needs at least one scale"));
        }
        if self.scales.iter().any(|s| *s < 0.0 || !s.is_finite()) {
            return Err(Error::invalid("scale parameters must be nonnegative"));
        }
        Ok(())
    }

    /// Per-member tracker configurations (identical except for the scale).
    pub fn member_configs(&self) -> Vec<TrackerConfig> {
        self.scales
            .iter()
            .map(|&s| {
                let mut c = self.tracker.clone();
                c.motion.scale_sigma = s;
                c
            })
            .collect()
    }
}

/// One recorded tracker output.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrackRecord {
    pub frame: usize,
    pub bbox: BoundingBox,
    pub confidence: f64,
}

/// All trackers plus their aligned trajectory histories.
pub struct EnsembleState {
    members: Vec<Member>,
    trajectories: Vec<Vec<TrackRecord>>,
    fused: Vec<TrackRecord>,
    fusion: Box<dyn FusionRule>,
    frame_index: usize,
}

struct Member {
    state: TrackerState,
    config: TrackerConfig,
    rng: Prng,
}

impl EnsembleState {
    /// Initializes every tracker on frame 0 with the same box. Member `i`
    /// owns the derived seed `master_seed + i`.
    pub fn new(
        frame0: &ImageRegion,
        box0: BoundingBox,
        config: &EnsembleConfig,
        master_seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let configs = config.member_configs();
        let mut members = Vec::with_capacity(configs.len());
        let mut trajectories = Vec::with_capacity(configs.len());
        for (i, member_config) in configs.into_iter().enumerate() {
            let state = TrackerState::new(frame0, box0, &member_config)?;
            let record = TrackRecord {
                frame: 0,
                bbox: state.reference().bbox,
                confidence: 1.0,
            };
            members.push(Member {
                state,
                config: member_config,
                rng: Prng::seed_from_u64(master_seed.wrapping_add(i as u64)),
            });
            trajectories.push(vec![record]);
        }
        let fused0 = trajectories[0][0];
        Ok(Self {
            members,
            trajectories,
            fused: vec![fused0],
            fusion: Box::new(AgreementFusion::default()),
            frame_index: 0,
        })
    }

    /// Replaces the fusion rule.
    pub fn with_fusion(mut self, fusion: Box<dyn FusionRule>) -> Self {
        self.fusion = fusion;
        self
    }

    pub fn tracker_count(&self) -> usize {
        self.members.len()
    }

    /// Per-tracker trajectory histories, aligned by recorded frame index.
    pub fn trajectories(&self) -> &[Vec<TrackRecord>] {
        &self.trajectories
    }

    pub fn fused(&self) -> &[TrackRecord] {
        &self.fused
    }

    /// Advances every tracker one frame and fuses their outputs. A tracker
    /// that fails on this frame is excluded from fusion for this frame
    /// only; the step fails only when every tracker fails.
    pub fn step(&mut self, frame: &ImageRegion) -> Result<BoundingBox> {
        let t = self.frame_index + 1;
        let outputs: Vec<Result<(BoundingBox, f64)>> = self
            .members
            .par_iter_mut()
            .map(|m| m.state.track_frame(frame, &m.config, &mut m.rng))
            .collect();

        let mut candidates = Vec::with_capacity(outputs.len());
        for (i, out) in outputs.iter().enumerate() {
            if let Ok((bbox, confidence)) = out {
                self.trajectories[i].push(TrackRecord {
                    frame: t,
                    bbox: *bbox,
                    confidence: *confidence,
                });
                candidates.push(FusionCandidate {
                    bbox: *bbox,
                    confidence: *confidence,
                    tracker_index: i,
                });
            }
        }
        if candidates.is_empty() {
            let first_err = outputs.into_iter().find_map(|o| o.err()).unwrap();
            return Err(first_err);
        }

        let previous = self.fused.last().map(|r| r.bbox);
        let idx = self.fusion.fuse(&candidates, previous.as_ref());
        let chosen = candidates[idx];
        self.fused.push(TrackRecord {
            frame: t,
            bbox: chosen.bbox,
            confidence: chosen.confidence,
        });
        self.frame_index = t;
        Ok(chosen.bbox)
    }
}
