//! Synthetic point-set experiments: set-size bias, processing time, and the
//! large-set convergence behavior of the similarity score.
//!
//! Point sets are drawn from two-component 2D Gaussian mixtures that share a
//! foreground component and differ in their background component. `P` keeps
//! a fixed size while `Q` is grown through a list of size ratios; each
//! equalization strategy is scored against an equal-size baseline.
//!
//! All experiments are bit-reproducible: trial `t` of sweep point `i` uses
//! the derived seed `master + i * trials + t`, so serial and parallel runs
//! agree.

use crate::bbs::{bbs_with_strategy, compute_bbs, EqualizationStrategy};
use crate::embedding::{FeaturePoint, PointSet};
use crate::error::{Error, Result};
use crate::particle_filter::BoundingBox;
use crate::region::ImageRegion;
use crate::Prng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::time::Instant;

/// Location weight handed to the distance; inert here because all synthetic
/// points carry location (0, 0).
const LAMBDA: f64 = 2.0;

/// A 2D Gaussian with a symmetric positive-definite covariance.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Gaussian2 {
    pub mean: [f64; 2],
    pub cov: [[f64; 2]; 2],
}

impl Gaussian2 {
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        let [[a, b], [c, d]] = cov;
        if (b - c).abs() > 1e-12 {
            return Err(Error::invalid("covariance must be symmetric"));
        }
        if a <= 0.0 || a * d - b * c <= 0.0 {
            return Err(Error::invalid("covariance must be positive-definite"));
        }
        Ok(Self { mean, cov })
    }

    pub fn isotropic(mean: [f64; 2], variance: f64) -> Result<Self> {
        Self::new(mean, [[variance, 0.0], [0.0, variance]])
    }

    /// Lower Cholesky factor, used to color standard-normal draws.
    fn cholesky(&self) -> [[f64; 2]; 2] {
        let [[a, b], [_, d]] = self.cov;
        let l11 = a.sqrt();
        let l21 = b / l11;
        let l22 = (d - l21 * l21).sqrt();
        [[l11, 0.0], [l21, l22]]
    }

    fn draw(&self, rng: &mut (impl Rng + ?Sized)) -> [f64; 2] {
        let l = self.cholesky();
        let z0: f64 = StandardNormal.sample(rng);
        let z1: f64 = StandardNormal.sample(rng);
        [
            self.mean[0] + l[0][0] * z0,
            self.mean[1] + l[1][0] * z0 + l[1][1] * z1,
        ]
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GmmComponent {
    pub gaussian: Gaussian2,
    pub weight: f64,
}

/// A Gaussian mixture over 2D points.
#[derive(Clone, Debug, Serialize)]
pub struct GmmSpec {
    components: Vec<GmmComponent>,
}

impl GmmSpec {
    pub fn new(components: Vec<GmmComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        if components.iter().any(|c| c.weight < 0.0) {
            return Err(Error::invalid("mixture weights must be nonnegative"));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { components })
    }

    /// Equal-weight two-component mixture, the construction used by all
    /// synthetic experiments.
    pub fn two_component(foreground: Gaussian2, background: Gaussian2) -> Self {
        Self {
            components: vec![
                GmmComponent {
                    gaussian: foreground,
                    weight: 0.5,
                },
                GmmComponent {
                    gaussian: background,
                    weight: 0.5,
                },
            ],
        }
    }

    pub fn components(&self) -> &[GmmComponent] {
        &self.components
    }
}

/// Shared foreground component of the default experiment mixtures.
pub fn default_foreground() -> Gaussian2 {
    Gaussian2::isotropic([0.0, 0.0], 1.0).unwrap()
}

/// Background component of the `P` mixture.
pub fn default_background_p() -> Gaussian2 {
    Gaussian2::isotropic([4.0, 0.0], 1.0).unwrap()
}

/// Background component of the `Q` mixture.
pub fn default_background_q() -> Gaussian2 {
    Gaussian2::isotropic([-4.0, 0.0], 1.0).unwrap()
}

/// Draws `n` i.i.d. points from the mixture. Points carry their 2D value as
/// appearance and a zero location, so the location term never contributes.
pub fn sample_gmm(spec: &GmmSpec, n: usize, rng: &mut (impl Rng + ?Sized)) -> PointSet {
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u: f64 = rng.random_range(0.0..1.0);
        let mut chosen = spec.components.len() - 1;
        for (i, c) in spec.components.iter().enumerate() {
            if u < c.weight {
                chosen = i;
                break;
            }
            u -= c.weight;
        }
        let xy = spec.components[chosen].gaussian.draw(rng);
        points.push(FeaturePoint {
            appearance: vec![xy[0], xy[1]],
            location: [0.0, 0.0],
        });
    }
    PointSet::new(points).expect("homogeneous by construction")
}

pub const BIAS_STRATEGIES: [&str; 4] = ["none", "random_sample", "cluster", "baseline"];
pub const TIMING_STRATEGIES: [&str; 3] = ["none", "random_sample", "cluster"];

#[derive(Clone, Debug, Serialize)]
pub struct StrategySeries {
    pub strategy: String,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

/// Mean score per size ratio for each strategy, plus the equal-size
/// baseline.
#[derive(Clone, Debug, Serialize)]
pub struct BiasCurve {
    pub ratios: Vec<usize>,
    pub trials: usize,
    pub series: Vec<StrategySeries>,
}

impl BiasCurve {
    pub fn series_for(&self, strategy: &str) -> Option<&StrategySeries> {
        self.series.iter().find(|s| s.strategy == strategy)
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs the set-size bias sweep. For each ratio `r`, `P` has `base_n`
/// points from mixture(foreground, background_p) and `Q` has `r * base_n`
/// points from mixture(foreground, background_q). The four recorded series
/// are the raw score, random sampling at `base_n`, clustering, and an
/// equal-size baseline where `Q` is redrawn at `base_n`.
pub fn run_bias_experiment(
    foreground: Gaussian2,
    background_p: Gaussian2,
    background_q: Gaussian2,
    base_n: usize,
    ratios: &[usize],
    trials: usize,
    master_seed: u64,
) -> Result<BiasCurve> {
    if trials == 0 || base_n == 0 || ratios.is_empty() || ratios.contains(&0) {
        return Err(Error::invalid(
            "bias experiment needs base_n >= 1, trials >= 1, ratios >= 1",
        ));
    }
    let spec_p = GmmSpec::two_component(foreground, background_p);
    let spec_q = GmmSpec::two_component(foreground, background_q);

    let jobs: Vec<(usize, usize)> = (0..ratios.len())
        .flat_map(|ri| (0..trials).map(move |t| (ri, t)))
        .collect();
    let scores: Vec<[f64; 4]> = jobs
        .par_iter()
        .map(|&(ri, t)| -> Result<[f64; 4]> {
            let seed = master_seed.wrapping_add((ri * trials + t) as u64);
            let mut rng = Prng::seed_from_u64(seed);
            let p = sample_gmm(&spec_p, base_n, &mut rng);
            let q_large = sample_gmm(&spec_q, base_n * ratios[ri], &mut rng);
            let q_base = sample_gmm(&spec_q, base_n, &mut rng);
            let none = compute_bbs(&p, &q_large, LAMBDA)?.value;
            let sampled = bbs_with_strategy(
                &p,
                &q_large,
                EqualizationStrategy::RandomSample(base_n),
                LAMBDA,
                &mut rng,
            )?
            .value;
            let clustered =
                bbs_with_strategy(&p, &q_large, EqualizationStrategy::Cluster, LAMBDA, &mut rng)?
                    .value;
            let baseline = compute_bbs(&p, &q_base, LAMBDA)?.value;
            Ok([none, sampled, clustered, baseline])
        })
        .collect::<Result<Vec<_>>>()?;

    let mut series: Vec<StrategySeries> = BIAS_STRATEGIES
        .iter()
        .map(|s| StrategySeries {
            strategy: s.to_string(),
            means: Vec::with_capacity(ratios.len()),
            stds: Vec::with_capacity(ratios.len()),
        })
        .collect();
    for ri in 0..ratios.len() {
        for (si, serie) in series.iter_mut().enumerate() {
            let vals: Vec<f64> = (0..trials).map(|t| scores[ri * trials + t][si]).collect();
            let (m, s) = mean_std(&vals);
            serie.means.push(m);
            serie.stds.push(s);
        }
    }
    Ok(BiasCurve {
        ratios: ratios.to_vec(),
        trials,
        series,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TimingSeries {
    pub strategy: String,
    pub median_seconds: Vec<f64>,
}

/// Median wall-clock per strategy per ratio.
#[derive(Clone, Debug, Serialize)]
pub struct TimingCurve {
    pub ratios: Vec<usize>,
    pub reps: usize,
    pub series: Vec<TimingSeries>,
}

impl TimingCurve {
    pub fn series_for(&self, strategy: &str) -> Option<&TimingSeries> {
        self.series.iter().find(|s| s.strategy == strategy)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Times `bbs_with_strategy` over the same sweep as the bias experiment,
/// excluding set generation. Each (ratio, strategy) point is the median of
/// `reps` runs to damp scheduler noise; `reps` should be at least 5.
pub fn run_timing_experiment(
    foreground: Gaussian2,
    background_p: Gaussian2,
    background_q: Gaussian2,
    base_n: usize,
    ratios: &[usize],
    reps: usize,
    master_seed: u64,
) -> Result<TimingCurve> {
    if reps == 0 || base_n == 0 || ratios.is_empty() || ratios.contains(&0) {
        return Err(Error::invalid(
            "timing experiment needs base_n >= 1, reps >= 1, ratios >= 1",
        ));
    }
    let spec_p = GmmSpec::two_component(foreground, background_p);
    let spec_q = GmmSpec::two_component(foreground, background_q);

    let mut series: Vec<TimingSeries> = TIMING_STRATEGIES
        .iter()
        .map(|s| TimingSeries {
            strategy: s.to_string(),
            median_seconds: Vec::with_capacity(ratios.len()),
        })
        .collect();

    for (ri, &ratio) in ratios.iter().enumerate() {
        let mut rng = Prng::seed_from_u64(master_seed.wrapping_add(ri as u64));
        let p = sample_gmm(&spec_p, base_n, &mut rng);
        let q = sample_gmm(&spec_q, base_n * ratio, &mut rng);
        let strategies = [
            EqualizationStrategy::None,
            EqualizationStrategy::RandomSample(base_n),
            EqualizationStrategy::Cluster,
        ];
        for (si, strategy) in strategies.iter().enumerate() {
            let mut times = Vec::with_capacity(reps);
            for rep in 0..reps {
                let mut run_rng = Prng::seed_from_u64(
                    master_seed.wrapping_add(((ri * reps + rep) as u64) << 16),
                );
                let start = Instant::now();
                let score = bbs_with_strategy(&p, &q, *strategy, LAMBDA, &mut run_rng)?;
                let elapsed = start.elapsed().as_secs_f64();
                std::hint::black_box(score);
                times.push(elapsed);
            }
            series[si].median_seconds.push(median(&mut times));
        }
    }
    Ok(TimingCurve {
        ratios: ratios.to_vec(),
        reps,
        series,
    })
}

/// Mean score for a fixed small `P` against growing `Q`, both drawn from
/// the same mixture.
#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub p_size: usize,
    pub q_sizes: Vec<usize>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub trials: usize,
}

impl ConvergenceTable {
    /// Mean at the largest set size.
    pub fn final_mean(&self) -> f64 {
        *self.means.last().unwrap()
    }

    /// True when means never drop by more than `tolerance` as sizes grow.
    pub fn monotone_within(&self, tolerance: f64) -> bool {
        self.means.windows(2).all(|w| w[1] >= w[0] - tolerance)
    }
}

/// Empirically checks the large-set limit: with `P` of fixed small size and
/// both sets drawn from the same mixture, the mean score approaches one as
/// `|Q|` grows.
pub fn verify_convergence_claim(
    spec: &GmmSpec,
    p_size: usize,
    q_sizes: &[usize],
    trials: usize,
    master_seed: u64,
) -> Result<ConvergenceTable> {
    if p_size == 0 || trials == 0 || q_sizes.is_empty() || q_sizes.contains(&0) {
        return Err(Error::invalid(
            "convergence check needs p_size >= 1, trials >= 1, q_sizes >= 1",
        ));
    }
    let jobs: Vec<(usize, usize)> = (0..q_sizes.len())
        .flat_map(|qi| (0..trials).map(move |t| (qi, t)))
        .collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(qi, t)| -> Result<f64> {
            let seed = master_seed.wrapping_add((qi * trials + t) as u64);
            let mut rng = Prng::seed_from_u64(seed);
            let p = sample_gmm(spec, p_size, &mut rng);
            let q = sample_gmm(spec, q_sizes[qi], &mut rng);
            Ok(compute_bbs(&p, &q, LAMBDA)?.value)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut means = Vec::with_capacity(q_sizes.len());
    let mut stds = Vec::with_capacity(q_sizes.len());
    for qi in 0..q_sizes.len() {
        let vals: Vec<f64> = (0..trials).map(|t| scores[qi * trials + t]).collect();
        let (m, s) = mean_std(&vals);
        means.push(m);
        stds.push(s);
    }
    Ok(ConvergenceTable {
        p_size,
        q_sizes: q_sizes.to_vec(),
        means,
        stds,
        trials,
    })
}

/// Writes a bias curve as `ratio,strategy,mean,std,trials` rows.
pub fn write_bias_csv<W: Write>(curve: &BiasCurve, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["ratio", "strategy", "mean", "std", "trials"])?;
    for (ri, ratio) in curve.ratios.iter().enumerate() {
        for s in &curve.series {
            w.write_record([
                ratio.to_string(),
                s.strategy.clone(),
                s.means[ri].to_string(),
                s.stds[ri].to_string(),
                curve.trials.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a timing curve as `ratio,strategy,median_seconds,reps` rows.
pub fn write_timing_csv<W: Write>(curve: &TimingCurve, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["ratio", "strategy", "median_seconds", "reps"])?;
    for (ri, ratio) in curve.ratios.iter().enumerate() {
        for s in &curve.series {
            w.write_record([
                ratio.to_string(),
                s.strategy.clone(),
                s.median_seconds[ri].to_string(),
                curve.reps.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a convergence table as `q_size,mean,std,trials` rows.
pub fn write_convergence_csv<W: Write>(table: &ConvergenceTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["q_size", "mean", "std", "trials"])?;
    for (qi, q) in table.q_sizes.iter().enumerate() {
        w.write_record([
            q.to_string(),
            table.means[qi].to_string(),
            table.stds[qi].to_string(),
            table.trials.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A generated image sequence with per-frame ground-truth boxes.
#[derive(Clone, Debug)]
pub struct SyntheticSequence {
    pub frames: Vec<ImageRegion>,
    pub ground_truth: Vec<BoundingBox>,
}

/// Renders a textured square translating over a cluttered noise background.
/// The square's texture is a smooth high-contrast pattern so that matching
/// degrades gracefully with small misalignments; the background is box-blurred
/// seeded noise. Positions are rounded to whole pixels when stamping.
pub fn moving_square_sequence(
    frame_w: usize,
    frame_h: usize,
    square: usize,
    start: (f64, f64),
    velocity: (f64, f64),
    n_frames: usize,
    seed: u64,
) -> SyntheticSequence {
    assert!(square >= 3 && frame_w > square && frame_h > square);
    let mut rng = Prng::seed_from_u64(seed);

    let background = blurred_noise(frame_w, frame_h, &mut rng);
    let texture = square_texture(square, &mut rng);

    let mut frames = Vec::with_capacity(n_frames);
    let mut ground_truth = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let x = start.0 + velocity.0 * t as f64;
        let y = start.1 + velocity.1 * t as f64;
        let xi = (x.round() as i64).clamp(0, (frame_w - square) as i64) as usize;
        let yi = (y.round() as i64).clamp(0, (frame_h - square) as i64) as usize;

        let mut data = background.clone();
        for v in 0..square {
            for u in 0..square {
                data[(yi + v) * frame_w + (xi + u)] = texture[v * square + u];
            }
        }
        frames.push(ImageRegion::new(frame_w, frame_h, 1, data).unwrap());
        ground_truth.push(BoundingBox::new(
            xi as f64,
            yi as f64,
            square as f64,
            square as f64,
        ));
    }
    SyntheticSequence {
        frames,
        ground_truth,
    }
}

fn blurred_noise(w: usize, h: usize, rng: &mut Prng) -> Vec<f64> {
    let raw: Vec<f64> = (0..w * h).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0;
            let mut count = 0.0;
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let yy = y as i64 + dy;
                    let xx = x as i64 + dx;
                    if yy >= 0 && yy < h as i64 && xx >= 0 && xx < w as i64 {
                        sum += raw[yy as usize * w + xx as usize];
                        count += 1.0;
                    }
                }
            }
            out[y * w + x] = sum / count;
        }
    }
    out
}

fn square_texture(square: usize, rng: &mut Prng) -> Vec<f64> {
    use std::f64::consts::TAU;
    let phase: f64 = rng.random_range(0.0..TAU);
    let mut tex = Vec::with_capacity(square * square);
    for v in 0..square {
        for u in 0..square {
            let a = (TAU * u as f64 / 13.0 + phase).sin();
            let b = (TAU * v as f64 / 11.0 - phase).cos();
            let c = (TAU * (u + v) as f64 / 17.0).sin();
            tex.push((0.5 + 0.28 * a * b + 0.2 * c).clamp(0.0, 1.0));
        }
    }
    tex
}
