//! Sequence ingestion, the one-pass evaluation protocol, success curves,
//! AUC, and oracle upper bounds over tracker ensembles.
//!
//! Sequences follow the common benchmark layout: a directory with an `img/`
//! subdirectory of zero-padded numbered frames plus `groundtruth_rect.txt`
//! with one `x,y,w,h` annotation per frame (1-based pixel coordinates,
//! converted to 0-based on load). Frame 0 is the given initialization and
//! is excluded from scoring.

use crate::ensemble::{EnsembleConfig, EnsembleState, TrackRecord};
use crate::error::{Error, Result};
use crate::particle_filter::BoundingBox;
use crate::region::ImageRegion;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

/// A named frame sequence with per-frame ground truth.
#[derive(Clone, Debug)]
pub struct Sequence {
    pub name: String,
    pub frames: Vec<PathBuf>,
    pub ground_truth: Vec<BoundingBox>,
}

impl Sequence {
    /// The given initialization box.
    pub fn initial_box(&self) -> BoundingBox {
        self.ground_truth[0]
    }
}

/// Loads a benchmark-style sequence directory.
pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());

    let img_dir = dir.join("img");
    if !img_dir.is_dir() {
        return Err(Error::Ingestion(format!(
            "{}: missing img/ directory",
            dir.display()
        )));
    }
    let mut frames: Vec<PathBuf> = std::fs::read_dir(&img_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .map(|e| {
                    let e = e.to_ascii_lowercase();
                    e == "jpg" || e == "jpeg" || e == "png"
                })
                .unwrap_or(false)
        })
        .collect();
    frames.sort();
    if frames.is_empty() {
        return Err(Error::Ingestion(format!(
            "{}: img/ contains no JPEG or PNG frames",
            dir.display()
        )));
    }

    let gt_path = dir.join("groundtruth_rect.txt");
    let text = std::fs::read_to_string(&gt_path).map_err(|e| {
        Error::Ingestion(format!("{}: cannot read ground truth: {e}", gt_path.display()))
    })?;
    let mut ground_truth = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed
            .split(|c| c == ',' || c == '\t' || c == ' ')
            .filter(|f| !f.is_empty())
            .collect();
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                Error::Ingestion(format!(
                    "groundtruth_rect.txt line {}: cannot parse '{trimmed}'",
                    line_no + 1
                ))
            })
        };
        if fields.len() != 4 {
            return Err(Error::Ingestion(format!(
                "groundtruth_rect.txt line {}: expected 4 numbers, got {} ('{trimmed}')",
                line_no + 1,
                fields.len()
            )));
        }
        let (x, y, w, h) = (
            parse(fields[0])?,
            parse(fields[1])?,
            parse(fields[2])?,
            parse(fields[3])?,
        );
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::Ingestion(format!(
                "groundtruth_rect.txt line {}: non-positive box size ('{trimmed}')",
                line_no + 1
            )));
        }
        // Benchmark annotations are 1-based pixel coordinates.
        ground_truth.push(BoundingBox::new(x - 1.0, y - 1.0, w, h));
    }

    if ground_truth.len() != frames.len() {
        return Err(Error::Ingestion(format!(
            "{name}: {} frames but {} ground-truth entries",
            frames.len(),
            ground_truth.len()
        )));
    }
    Ok(Sequence {
        name,
        frames,
        ground_truth,
    })
}

/// Decodes one frame into a region (grayscale stays single-channel).
pub fn load_frame(path: &Path) -> Result<ImageRegion> {
    let img = image::open(path)
        .map_err(|e| Error::Frame(format!("{}: {e}", path.display())))?;
    Ok(ImageRegion::from_dynamic(&img))
}

/// The conventional 21 evenly spaced overlap thresholds 0.00..=1.00.
pub fn default_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 * 0.05).collect()
}

/// Fraction of scored frames whose overlap exceeds each threshold.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuccessCurve {
    pub thresholds: Vec<f64>,
    pub success_rates: Vec<f64>,
}

/// Builds a success curve. Frame 0 is the given initialization and is not
/// scored; overlap must strictly exceed the threshold to count.
pub fn success_curve(
    pred: &[BoundingBox],
    gt: &[BoundingBox],
    thresholds: &[f64],
) -> Result<SuccessCurve> {
    if pred.len() != gt.len() {
        return Err(Error::invalid(format!(
            "prediction count {} != ground truth count {}",
            pred.len(),
            gt.len()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::invalid(
            "need at least 2 frames (frame 0 is excluded from scoring)",
        ));
    }
    if thresholds.is_empty() {
        return Err(Error::invalid("need at least one threshold"));
    }
    let ious: Vec<f64> = pred
        .iter()
        .zip(gt.iter())
        .skip(1)
        .map(|(p, g)| p.iou(g))
        .collect();
    let n = ious.len() as f64;
    let success_rates = thresholds
        .iter()
        .map(|&t| ious.iter().filter(|&&v| v > t).count() as f64 / n)
        .collect();
    Ok(SuccessCurve {
        thresholds: thresholds.to_vec(),
        success_rates,
    })
}

/// Area under a success curve by trapezoidal integration over its
/// thresholds.
pub fn auc(curve: &SuccessCurve) -> f64 {
    let t = &curve.thresholds;
    let r = &curve.success_rates;
    let mut area = 0.0;
    for i in 1..t.len() {
        area += (r[i - 1] + r[i]) / 2.0 * (t[i] - t[i - 1]);
    }
    area
}

/// Pointwise mean of curves sharing one threshold grid.
pub fn mean_curve(curves: &[SuccessCurve]) -> Result<SuccessCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invalid("mean of zero curves"))?;
    for c in curves {
        if c.thresholds != first.thresholds {
            return Err(Error::invalid("curves use different threshold grids"));
        }
    }
    let n = curves.len() as f64;
    let success_rates = (0..first.success_rates.len())
        .map(|i| curves.iter().map(|c| c.success_rates[i]).sum::<f64>() / n)
        .collect();
    Ok(SuccessCurve {
        thresholds: first.thresholds.clone(),
        success_rates,
    })
}

/// Upper bounds from hindsight tracker selection.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleBounds {
    /// Best fixed tracker across all sequences.
    pub best_single_auc: f64,
    /// Best tracker chosen per sequence.
    pub per_sequence_auc: f64,
    /// Best box chosen per frame.
    pub per_frame_auc: f64,
}

/// Computes the oracle bounds for aligned trajectories.
///
/// `trajectories[s][t]` are tracker `t`'s boxes on sequence `s` (one per
/// frame, including frame 0); `gts[s]` are the matching ground-truth boxes.
/// All sequences must carry the same tracker count.
pub fn oracle_upper_bounds(
    trajectories: &[Vec<Vec<BoundingBox>>],
    gts: &[Vec<BoundingBox>],
    thresholds: &[f64],
) -> Result<OracleBounds> {
    if trajectories.is_empty() || trajectories.len() != gts.len() {
        return Err(Error::invalid("need aligned, nonempty trajectory and gt lists"));
    }
    let n_trackers = trajectories[0].len();
    if n_trackers == 0 || trajectories.iter().any(|s| s.len() != n_trackers) {
        return Err(Error::invalid("all sequences need the same tracker count"));
    }

    let mut per_seq_tracker_aucs: Vec<Vec<f64>> = Vec::with_capacity(gts.len());
    let mut per_frame_aucs: Vec<f64> = Vec::with_capacity(gts.len());
    for (seq_trajs, gt) in trajectories.iter().zip(gts.iter()) {
        let mut tracker_aucs = Vec::with_capacity(n_trackers);
        for traj in seq_trajs {
            tracker_aucs.push(auc(&success_curve(traj, gt, thresholds)?));
        }
        per_seq_tracker_aucs.push(tracker_aucs);

        // Hindsight per-frame selection: the box with maximal overlap.
        let oracle_traj: Vec<BoundingBox> = (0..gt.len())
            .map(|f| {
                let mut best = seq_trajs[0][f];
                let mut best_iou = best.iou(&gt[f]);
                for traj in &seq_trajs[1..] {
                    let v = traj[f].iou(&gt[f]);
                    if v > best_iou {
                        best_iou = v;
                        best = traj[f];
                    }
                }
                best
            })
            .collect();
        per_frame_aucs.push(auc(&success_curve(&oracle_traj, gt, thresholds)?));
    }

    let n_seq = gts.len() as f64;
    let best_single_auc = (0..n_trackers)
        .map(|t| {
            per_seq_tracker_aucs
                .iter()
                .map(|aucs| aucs[t])
                .sum::<f64>()
                / n_seq
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let per_sequence_auc = per_seq_tracker_aucs
        .iter()
        .map(|aucs| aucs.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .sum::<f64>()
        / n_seq;
    let per_frame_auc = per_frame_aucs.iter().sum::<f64>() / n_seq;

    Ok(OracleBounds {
        best_single_auc,
        per_sequence_auc,
        per_frame_auc,
    })
}

/// Tracking output of one sequence.
pub struct SequenceRun {
    pub name: String,
    /// Raw per-tracker records (frames with errors are absent).
    pub tracker_records: Vec<Vec<TrackRecord>>,
    /// Fused record per processed frame.
    pub fused_records: Vec<TrackRecord>,
    /// Per-tracker boxes aligned to the frame count; a tracker that failed
    /// a frame carries its previous box forward.
    pub aligned_tracker_boxes: Vec<Vec<BoundingBox>>,
    /// Fused boxes aligned to the frame count.
    pub fused_boxes: Vec<BoundingBox>,
}

/// Runs the ensemble once through a sequence from its ground-truth first
/// box.
pub fn run_sequence(seq: &Sequence, config: &EnsembleConfig, seed: u64) -> Result<SequenceRun> {
    let frame0 = load_frame(&seq.frames[0])?;
    let mut ensemble = EnsembleState::new(&frame0, seq.initial_box(), config, seed)?;
    let mut fused_boxes = vec![ensemble.fused()[0].bbox];

    for path in &seq.frames[1..] {
        let frame = load_frame(path)?;
        match ensemble.step(&frame) {
            Ok(bbox) => fused_boxes.push(bbox),
            // Total per-frame failure: hold the previous output.
            Err(_) => fused_boxes.push(*fused_boxes.last().unwrap()),
        }
    }

    let n_frames = seq.frames.len();
    let aligned_tracker_boxes = ensemble
        .trajectories()
        .iter()
        .map(|records| {
            let mut aligned = Vec::with_capacity(n_frames);
            let mut it = records.iter().peekable();
            let mut last = records[0].bbox;
            for f in 0..n_frames {
                if let Some(r) = it.peek() {
                    if r.frame == f {
                        last = r.bbox;
                        it.next();
                    }
                }
                aligned.push(last);
            }
            aligned
        })
        .collect();

    Ok(SequenceRun {
        name: seq.name.clone(),
        tracker_records: ensemble.trajectories().to_vec(),
        fused_records: ensemble.fused().to_vec(),
        aligned_tracker_boxes,
        fused_boxes,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceResult {
    pub name: String,
    pub auc: f64,
    pub tracker_aucs: Vec<f64>,
    pub curve: SuccessCurve,
}

#[derive(Clone, Debug, Serialize)]
pub struct SequenceFailure {
    pub name: String,
    pub error: String,
}

/// One-pass evaluation report over a set of sequences.
#[derive(Serialize)]
pub struct OpeReport {
    pub config: EnsembleConfig,
    pub seed: u64,
    pub per_sequence: Vec<SequenceResult>,
    pub failures: Vec<SequenceFailure>,
    pub overall_curve: SuccessCurve,
    pub overall_auc: f64,
    pub oracle: OracleBounds,
}

pub struct OpeOutcome {
    pub report: OpeReport,
    pub runs: Vec<SequenceRun>,
}

/// Runs every sequence (in parallel, with a per-sequence derived seed),
/// scores the fused trajectories, and aggregates the mean curve and the
/// oracle bounds. Failed sequences are reported and excluded from the
/// aggregates; at least one sequence must succeed.
pub fn run_ope(
    sequences: &[Sequence],
    config: &EnsembleConfig,
    master_seed: u64,
) -> Result<OpeOutcome> {
    if sequences.is_empty() {
        return Err(Error::Ingestion("no sequences to evaluate".into()));
    }
    config.validate()?;
    let thresholds = default_thresholds();

    let attempts: Vec<(String, Result<SequenceRun>)> = sequences
        .par_iter()
        .enumerate()
        .map(|(i, seq)| {
            let seed = master_seed.wrapping_add((i as u64) << 32);
            (seq.name.clone(), run_sequence(seq, config, seed))
        })
        .collect();

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let mut per_sequence = Vec::new();
    let mut curves = Vec::new();
    let mut oracle_trajs = Vec::new();
    let mut oracle_gts = Vec::new();

    for ((name, attempt), seq) in attempts.into_iter().zip(sequences.iter()) {
        match attempt {
            Err(e) => failures.push(SequenceFailure {
                name,
                error: e.to_string(),
            }),
            Ok(run) => {
                let curve = success_curve(&run.fused_boxes, &seq.ground_truth, &thresholds)?;
                let tracker_aucs = run
                    .aligned_tracker_boxes
                    .iter()
                    .map(|traj| Ok(auc(&success_curve(traj, &seq.ground_truth, &thresholds)?)))
                    .collect::<Result<Vec<f64>>>()?;
                per_sequence.push(SequenceResult {
                    name,
                    auc: auc(&curve),
                    tracker_aucs,
                    curve: curve.clone(),
                });
                curves.push(curve);
                oracle_trajs.push(run.aligned_tracker_boxes.clone());
                oracle_gts.push(seq.ground_truth.clone());
                runs.push(run);
            }
        }
    }

    if runs.is_empty() {
        return Err(Error::Ingestion(format!(
            "all {} sequences failed; first error: {}",
            sequences.len(),
            failures[0].error
        )));
    }

    let overall_curve = mean_curve(&curves)?;
    let overall_auc = auc(&overall_curve);
    let oracle = oracle_upper_bounds(&oracle_trajs, &oracle_gts, &thresholds)?;

    Ok(OpeOutcome {
        report: OpeReport {
            config: config.clone(),
            seed: master_seed,
            per_sequence,
            failures,
            overall_curve,
            overall_auc,
            oracle,
        },
        runs,
    })
}

/// Writes `threshold,rate` rows.
pub fn write_curve_csv<W: Write>(curve: &SuccessCurve, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["threshold", "rate"])?;
    for (t, r) in curve.thresholds.iter().zip(curve.success_rates.iter()) {
        w.write_record([t.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes per-frame boxes for every tracker and the fused output:
/// `frame,source,x,y,w,h,confidence`, frame-major.
pub fn write_boxes_csv<W: Write>(run: &SequenceRun, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["frame", "source", "x", "y", "w", "h", "confidence"])?;
    let max_frame = run
        .fused_records
        .iter()
        .map(|r| r.frame)
        .max()
        .unwrap_or(0);
    let mut cursors = vec![0usize; run.tracker_records.len()];
    let mut fused_cursor = 0usize;
    for frame in 0..=max_frame {
        for (t, records) in run.tracker_records.iter().enumerate() {
            if let Some(r) = records.get(cursors[t]) {
                if r.frame == frame {
                    write_record_row(&mut w, frame, &format!("tracker{t}"), r)?;
                    cursors[t] += 1;
                }
            }
        }
        if let Some(r) = run.fused_records.get(fused_cursor) {
            if r.frame == frame {
                write_record_row(&mut w, frame, "fused", r)?;
                fused_cursor += 1;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_record_row<W: Write>(
    w: &mut csv::Writer<W>,
    frame: usize,
    source: &str,
    r: &TrackRecord,
) -> Result<()> {
    w.write_record([
        frame.to_string(),
        source.to_string(),
        r.bbox.x.to_string(),
        r.bbox.y.to_string(),
        r.bbox.w.to_string(),
        r.bbox.h.to_string(),
        r.confidence.to_string(),
    ])?;
    Ok(())
}

/// Writes the report as pretty-printed JSON.
pub fn write_report_json<W: Write>(report: &OpeReport, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, report)?;
    writer.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BoundingBox {
        BoundingBox::new(x, y, w, h)
    }

    fn write_sequence_dir(
        dir: &Path,
        n_frames: usize,
        gt_lines: &[&str],
    ) -> std::io::Result<()> {
        let img = dir.join("img");
        std::fs::create_dir_all(&img)?;
        for i in 0..n_frames {
            let buf = image::GrayImage::from_pixel(32, 24, image::Luma([128u8]));
            buf.save(img.join(format!("{:04}.png", i + 1))).unwrap();
        }
        std::fs::write(dir.join("groundtruth_rect.txt"), gt_lines.join("\n"))
    }

    #[test]
    fn parses_comma_and_tab_lines_with_one_based_conversion() {
        let tmp = tempfile::tempdir().unwrap();
        write_sequence_dir(tmp.path(), 2, &["213,253,34,81", "10\t20\t30\t40"]).unwrap();
        let seq = load_sequence(tmp.path()).unwrap();
        assert_eq!(seq.ground_truth[0], bx(212.0, 252.0, 34.0, 81.0));
        assert_eq!(seq.ground_truth[1], bx(9.0, 19.0, 30.0, 40.0));
        assert_eq!(seq.frames.len(), 2);
    }

    #[test]
    fn count_mismatch_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        write_sequence_dir(tmp.path(), 3, &["1,1,5,5", "1,1,5,5"]).unwrap();
        let err = load_sequence(tmp.path()).unwrap_err();
        assert!(matches!(err, Error::Ingestion(_)));
    }

    #[test]
    fn bad_lines_name_their_line_number() {
        let tmp = tempfile::tempdir().unwrap();
        write_sequence_dir(tmp.path(), 2, &["1,1,5,5", "1,1,0,5"]).unwrap();
        let err = load_sequence(tmp.path()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");

        let tmp = tempfile::tempdir().unwrap();
        write_sequence_dir(tmp.path(), 2, &["1,1,5,5", "1,1,five,5"]).unwrap();
        let err = load_sequence(tmp.path()).unwrap_err().to_string();
        assert!(err.contains("line 2"), "{err}");
    }

    #[test]
    fn missing_ground_truth_or_images_error() {
        let tmp = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(tmp.path().join("img")).unwrap();
        assert!(matches!(
            load_sequence(tmp.path()).unwrap_err(),
            Error::Ingestion(_)
        ));
        let tmp = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(tmp.path()).unwrap();
        std::fs::write(tmp.path().join("groundtruth_rect.txt"), "1,1,5,5").unwrap();
        assert!(matches!(
            load_sequence(tmp.path()).unwrap_err(),
            Error::Ingestion(_)
        ));
    }

    #[test]
    fn ground_truth_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        write_sequence_dir(tmp.path(), 2, &["213,253,34,81", "5,6,7,8"]).unwrap();
        let seq = load_sequence(tmp.path()).unwrap();
        // Serialize back to 1-based text and re-parse.
        let text: Vec<String> = seq
            .ground_truth
            .iter()
            .map(|b| format!("{},{},{},{}", b.x + 1.0, b.y + 1.0, b.w, b.h))
            .collect();
        let tmp2 = tempfile::tempdir().unwrap();
        write_sequence_dir(
            tmp2.path(),
            2,
            &text.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
        )
        .unwrap();
        let seq2 = load_sequence(tmp2.path()).unwrap();
        assert_eq!(seq.ground_truth, seq2.ground_truth);
    }

    #[test]
    fn perfect_predictions_curve_and_auc() {
        let gt: Vec<BoundingBox> = (0..11).map(|i| bx(i as f64, 0.0, 10.0, 10.0)).collect();
        let curve = success_curve(&gt, &gt, &default_thresholds()).unwrap();
        for (t, r) in curve.thresholds.iter().zip(curve.success_rates.iter()) {
            if *t < 1.0 {
                assert_eq!(*r, 1.0);
            } else {
                assert_eq!(*r, 0.0);
            }
        }
        // Trapezoid over the step at the last bin: 1 - 0.05 / 2.
        assert!((auc(&curve) - 0.975).abs() < 1e-12);
    }

    #[test]
    fn disjoint_predictions_score_zero_everywhere() {
        let gt: Vec<BoundingBox> = (0..5).map(|_| bx(0.0, 0.0, 10.0, 10.0)).collect();
        let pred: Vec<BoundingBox> = (0..5).map(|_| bx(100.0, 100.0, 10.0, 10.0)).collect();
        let curve = success_curve(&pred, &gt, &default_thresholds()).unwrap();
        // Strict '>' keeps the rate at 0 even for the 0.0 threshold.
        assert!(curve.success_rates.iter().all(|&r| r == 0.0));
        assert_eq!(auc(&curve), 0.0);
    }

    #[test]
    fn mixed_quality_counts_at_half() {
        // Frame 0 plus 4 scored frames: two with IoU 0.8, two with IoU 0.2.
        let gt: Vec<BoundingBox> = (0..5).map(|_| bx(0.0, 0.0, 10.0, 10.0)).collect();
        // Offset by 10|9 * (1 - iou)/(1 + iou): x shift s gives IoU (10-s)/(10+s).
        let shift = |iou: f64| 10.0 * (1.0 - iou) / (1.0 + iou);
        let pred = vec![
            bx(0.0, 0.0, 10.0, 10.0),
            bx(shift(0.8), 0.0, 10.0, 10.0),
            bx(shift(0.8), 0.0, 10.0, 10.0),
            bx(shift(0.2), 0.0, 10.0, 10.0),
            bx(shift(0.2), 0.0, 10.0, 10.0),
        ];
        let curve = success_curve(&pred, &gt, &[0.5]).unwrap();
        assert_eq!(curve.success_rates, vec![0.5]);
    }

    #[test]
    fn auc_examples() {
        let t = default_thresholds();
        let ones = SuccessCurve {
            thresholds: t.clone(),
            success_rates: vec![1.0; t.len()],
        };
        assert!((auc(&ones) - 1.0).abs() < 1e-12);
        let zeros = SuccessCurve {
            thresholds: t.clone(),
            success_rates: vec![0.0; t.len()],
        };
        assert_eq!(auc(&zeros), 0.0);
        let linear = SuccessCurve {
            thresholds: t.clone(),
            success_rates: t.iter().map(|v| 1.0 - v).collect(),
        };
        assert!((auc(&linear) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn mean_curve_is_linear_in_auc() {
        let t = default_thresholds();
        let a = SuccessCurve {
            thresholds: t.clone(),
            success_rates: t.iter().map(|v| 1.0 - v).collect(),
        };
        let b = SuccessCurve {
            thresholds: t.clone(),
            success_rates: t.iter().map(|v| (1.0 - v) * 0.5).collect(),
        };
        let m = mean_curve(&[a.clone(), b.clone()]).unwrap();
        assert!((auc(&m) - (auc(&a) + auc(&b)) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_identical_trackers_collapse() {
        let gt: Vec<BoundingBox> = (0..6).map(|i| bx(i as f64, 0.0, 10.0, 10.0)).collect();
        let traj: Vec<BoundingBox> = (0..6).map(|i| bx(i as f64 + 1.0, 0.0, 10.0, 10.0)).collect();
        let bounds = oracle_upper_bounds(
            &[vec![traj.clone(), traj.clone()]],
            &[gt.clone()],
            &default_thresholds(),
        )
        .unwrap();
        let single = auc(&success_curve(&traj, &gt, &default_thresholds()).unwrap());
        assert!((bounds.best_single_auc - single).abs() < 1e-12);
        assert!((bounds.per_sequence_auc - single).abs() < 1e-12);
        assert!((bounds.per_frame_auc - single).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn success_curves_are_nonincreasing(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = crate::Prng::seed_from_u64(seed);
            let n = rng.random_range(2..20);
            let gt: Vec<BoundingBox> = (0..n)
                .map(|_| bx(rng.random_range(0.0..50.0), rng.random_range(0.0..50.0),
                            rng.random_range(5.0..20.0), rng.random_range(5.0..20.0)))
                .collect();
            let pred: Vec<BoundingBox> = gt
                .iter()
                .map(|b| bx(b.x + rng.random_range(-10.0..10.0), b.y + rng.random_range(-10.0..10.0), b.w, b.h))
                .collect();
            let curve = success_curve(&pred, &gt, &default_thresholds()).unwrap();
            for w in curve.success_rates.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
            let a = auc(&curve);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn oracle_dominance_chain_holds(seed in 0u64..200) {
            use rand::{Rng, SeedableRng};
            let mut rng = crate::Prng::seed_from_u64(seed);
            let n_seq = rng.random_range(1..4);
            let n_trk = rng.random_range(1..5usize);
            let mut trajs = Vec::new();
            let mut gts = Vec::new();
            for _ in 0..n_seq {
                let frames = rng.random_range(2..12);
                let gt: Vec<BoundingBox> = (0..frames)
                    .map(|_| bx(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0),
                                rng.random_range(5.0..15.0), rng.random_range(5.0..15.0)))
                    .collect();
                let seq_trajs: Vec<Vec<BoundingBox>> = (0..n_trk)
                    .map(|_| gt.iter().map(|b| bx(
                        b.x + rng.random_range(-8.0..8.0),
                        b.y + rng.random_range(-8.0..8.0),
                        b.w * rng.random_range(0.7..1.3),
                        b.h * rng.random_range(0.7..1.3))).collect())
                    .collect();
                trajs.push(seq_trajs);
                gts.push(gt);
            }
            let bounds = oracle_upper_bounds(&trajs, &gts, &default_thresholds()).unwrap();
            prop_assert!(bounds.per_frame_auc >= bounds.per_sequence_auc - 1e-12);
            prop_assert!(bounds.per_sequence_auc >= bounds.best_single_auc - 1e-12);
        }
    }
}
