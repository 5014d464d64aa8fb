//! Evaluation protocols: the cross-subject global model and the per-subject
//! user-based model, repeated over seeded random splits, with balanced test
//! sets, confusion matrices and the confidence-threshold sweep.
//!
//! Every protocol run first produces per-frame logs (one per repetition);
//! accuracies at any threshold are recomputed from those logs, so the sweep
//! never retrains and decided sets are nested across thresholds.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{balanced_test_set, Dataset, DatasetError, SubjectStream};
use crate::decide::{check_threshold, DecideError, Decision};
use crate::model::{compute_contexts, Classifier, ModelError, TrainParams};
use crate::normalize::NormalizationContext;
use crate::rng::{derive_seed, stream_rng};
use crate::types::{GazeRegion, LandmarkFrame, RegionScheme, FRAME_RATE};

/// Enrollment run length per region: 3 s at 30 fps.
pub const ENROLL_FRAMES: usize = 90;
/// Minimum separation between last training and first test frame: 30 s.
pub const GAP_FRAMES: u64 = 900;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least {need} subjects, got {got}")]
    TooFewSubjects { need: usize, got: usize },
    #[error("subject {subject:?} has no frames of class {class:?}")]
    MissingClass { subject: String, class: &'static str },
    #[error("no subject has an eligible enrollment/test split")]
    NoEligibleSubjects,
    #[error("thresholds must be >= 1 and sorted ascending")]
    BadThresholds,
    #[error("repetitions must be positive")]
    NoRepetitions,
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Decide(#[from] DecideError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    Global,
    UserBased,
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Global => "global",
            Protocol::UserBased => "user",
        })
    }
}

impl FromStr for Protocol {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "global" => Ok(Protocol::Global),
            "user" | "user-based" => Ok(Protocol::UserBased),
            other => Err(format!("unknown protocol {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub train: TrainParams,
    /// Fraction of subjects held out by the global protocol.
    pub test_fraction: f64,
    pub enroll_frames: usize,
    pub gap_frames: u64,
    /// Test frames each class must have after the gap for a user-based
    /// enrollment window to be eligible.
    pub min_test_frames: usize,
}

impl Default for EvalParams {
    fn default() -> Self {
        EvalParams {
            train: TrainParams::default(),
            test_fraction: 0.2,
            enroll_frames: ENROLL_FRAMES,
            gap_frames: GAP_FRAMES,
            min_test_frames: 30,
        }
    }
}

/// One evaluated test frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub subject: String,
    pub frame_index: u64,
    pub true_region: GazeRegion,
    pub true_class: usize,
    pub predicted: usize,
    pub confidence: f64,
}

impl FrameRecord {
    pub fn decided(&self, threshold: f64) -> bool {
        self.confidence >= threshold
    }

    pub fn correct(&self) -> bool {
        self.true_class == self.predicted
    }
}

/// Per-frame results of one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionLog {
    pub repetition: usize,
    pub records: Vec<FrameRecord>,
    /// Training frames as `(subject, frame_index)`.
    pub train_frames: Vec<(String, u64)>,
    pub excluded_subjects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    n: usize,
    /// Row-major, rows are true classes.
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n: usize) -> Self {
        ConfusionMatrix { n, counts: vec![0; n * n] }
    }

    pub fn from_counts(n: usize, counts: Vec<u64>) -> Self {
        assert_eq!(counts.len(), n * n, "confusion counts must be n x n");
        ConfusionMatrix { n, counts }
    }

    pub fn add(&mut self, truth: usize, predicted: usize) {
        self.counts[truth * self.n + predicted] += 1;
    }

    pub fn n_classes(&self) -> usize {
        self.n
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.n + predicted]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `trace / total`, undefined for an empty matrix.
    pub fn accuracy(&self) -> Option<f64> {
        let t = self.total();
        (t > 0).then(|| self.trace() as f64 / t as f64)
    }

    /// Merge the six-region matrix into driving-related vs center stack.
    pub fn collapse_to_two_class(&self) -> ConfusionMatrix {
        assert_eq!(self.n, 6, "collapse needs a six-class matrix");
        let map = |c: usize| RegionScheme::TwoClass.class_of(GazeRegion::ALL[c]);
        let mut out = ConfusionMatrix::new(2);
        for t in 0..6 {
            for p in 0..6 {
                out.counts[map(t) * 2 + map(p)] += self.get(t, p);
            }
        }
        out
    }
}

/// Map a six-region `(truth, predicted)` pair into the two-class scheme.
pub fn collapse_pair(truth: usize, predicted: usize) -> (usize, usize) {
    let map = |c: usize| RegionScheme::TwoClass.class_of(GazeRegion::ALL[c]);
    (map(truth), map(predicted))
}

/// Figures for one repetition at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct RepSummary {
    pub confusion: ConfusionMatrix,
    pub evaluated: usize,
    pub decided: usize,
    /// `(correct, decided)` per subject.
    pub per_subject: BTreeMap<String, (usize, usize)>,
}

impl RepSummary {
    pub fn accuracy(&self) -> Option<f64> {
        self.confusion.accuracy()
    }

    /// Elapsed video seconds per decision.
    pub fn decision_period_s(&self) -> Option<f64> {
        (self.decided > 0).then(|| self.evaluated as f64 / FRAME_RATE / self.decided as f64)
    }
}

pub fn summarize_rep(log: &RepetitionLog, n_classes: usize, threshold: f64) -> RepSummary {
    let mut confusion = ConfusionMatrix::new(n_classes);
    let mut per_subject: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut decided = 0;
    for r in &log.records {
        let entry = per_subject.entry(r.subject.clone()).or_default();
        if r.decided(threshold) {
            confusion.add(r.true_class, r.predicted);
            decided += 1;
            entry.1 += 1;
            entry.0 += usize::from(r.correct());
        }
    }
    RepSummary { confusion, evaluated: log.records.len(), decided, per_subject }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scheme: RegionScheme,
    pub protocol: Protocol,
    pub threshold: f64,
    pub repetitions: usize,
    /// Undefined when no repetition produced a decision.
    pub mean_accuracy: Option<f64>,
    pub std_accuracy: Option<f64>,
    pub rep_accuracies: Vec<Option<f64>>,
    /// Mean over repetitions of the confusion counts, row-major.
    pub mean_confusion: Vec<f64>,
    pub decision_fraction: f64,
    pub mean_decision_period_s: Option<f64>,
    /// Subject id to `(mean, std)` of per-repetition accuracy.
    pub per_subject_accuracy: BTreeMap<String, (f64, f64)>,
    pub excluded_subjects: Vec<String>,
    /// For six-class runs: two-class accuracy on exactly the same decisions.
    pub collapsed_two_class_accuracy: Option<f64>,
    pub evaluated_frames: usize,
    pub decided_frames: usize,
}

fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Some((mean, std))
}

pub fn build_report(logs: &[RepetitionLog], scheme: RegionScheme, protocol: Protocol, threshold: f64) -> EvalReport {
    let n = scheme.n_classes();
    let summaries: Vec<RepSummary> = logs.iter().map(|l| summarize_rep(l, n, threshold)).collect();
    let rep_accuracies: Vec<Option<f64>> = summaries.iter().map(|s| s.accuracy()).collect();
    let defined: Vec<f64> = rep_accuracies.iter().flatten().copied().collect();
    let stats = mean_std(&defined);

    let mut mean_confusion = vec![0.0; n * n];
    for s in &summaries {
        for (m, &c) in mean_confusion.iter_mut().zip(&s.confusion.counts) {
            *m += c as f64;
        }
    }
    let reps = logs.len().max(1) as f64;
    mean_confusion.iter_mut().for_each(|m| *m /= reps);

    let evaluated: usize = summaries.iter().map(|s| s.evaluated).sum();
    let decided: usize = summaries.iter().map(|s| s.decided).sum();

    let mut subject_accs: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for s in &summaries {
        for (subject, &(correct, dec)) in &s.per_subject {
            if dec > 0 {
                subject_accs.entry(subject.clone()).or_default().push(correct as f64 / dec as f64);
            }
        }
    }
    let per_subject_accuracy = subject_accs
        .into_iter()
        .filter_map(|(k, v)| mean_std(&v).map(|ms| (k, ms)))
        .collect();

    let mut excluded: Vec<String> = logs.iter().flat_map(|l| l.excluded_subjects.iter().cloned()).collect();
    excluded.sort();
    excluded.dedup();

    let collapsed_two_class_accuracy = (scheme == RegionScheme::SixClass)
        .then(|| {
            let mut m = ConfusionMatrix::new(6);
            for s in &summaries {
                for (a, &c) in m.counts.iter_mut().zip(&s.confusion.counts) {
                    *a += c;
                }
            }
            m.collapse_to_two_class().accuracy()
        })
        .flatten();

    EvalReport {
        scheme,
        protocol,
        threshold,
        repetitions: logs.len(),
        mean_accuracy: stats.map(|s| s.0),
        std_accuracy: stats.map(|s| s.1),
        rep_accuracies,
        mean_confusion,
        decision_fraction: if evaluated > 0 { decided as f64 / evaluated as f64 } else { 0.0 },
        mean_decision_period_s: (decided > 0).then(|| evaluated as f64 / FRAME_RATE / decided as f64),
        per_subject_accuracy,
        excluded_subjects: excluded,
        collapsed_two_class_accuracy,
        evaluated_frames: evaluated,
        decided_frames: decided,
    }
}

fn score_frames(
    classifier: &Classifier,
    ctx: &NormalizationContext,
    frames: &[LandmarkFrame],
    scheme: RegionScheme,
) -> Result<Vec<FrameRecord>, EvalError> {
    frames
        .iter()
        .map(|f| {
            let region = f.label.ok_or_else(|| DatasetError::Unlabeled {
                subject: f.subject_id.clone(),
                frame_index: f.frame_index,
            })?;
            let d = Decision::from_probs(classifier.predict_proba(&ctx.normalize_frame(f)))?;
            Ok(FrameRecord {
                subject: f.subject_id.clone(),
                frame_index: f.frame_index,
                true_region: region,
                true_class: scheme.class_of(region),
                predicted: d.predicted,
                confidence: d.confidence,
            })
        })
        .collect()
}

fn check_all_classes(s: &SubjectStream, scheme: RegionScheme) -> Result<(), EvalError> {
    let ds = Dataset::from_frames(s.frames.iter().cloned())?;
    let counts = ds.class_counts(scheme);
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(EvalError::MissingClass { subject: s.subject_id.clone(), class: scheme.class_name(c) });
    }
    Ok(())
}

/// Number of held-out subjects: `round(test_fraction * n)`, at least one on
/// each side. Fifty subjects split 40/10.
pub fn global_test_count(n_subjects: usize, test_fraction: f64) -> usize {
    ((n_subjects as f64 * test_fraction).round() as usize).clamp(1, n_subjects - 1)
}

/// Per-frame logs of the global protocol.
pub fn global_logs(
    dataset: &Dataset,
    scheme: RegionScheme,
    params: &EvalParams,
    reps: usize,
    seed: u64,
) -> Result<Vec<RepetitionLog>, EvalError> {
    let subjects = dataset.subjects();
    if subjects.len() < 2 {
        return Err(EvalError::TooFewSubjects { need: 2, got: subjects.len() });
    }
    if reps == 0 {
        return Err(EvalError::NoRepetitions);
    }
    for s in subjects {
        check_all_classes(s, scheme)?;
    }
    let contexts = compute_contexts(dataset, params.train.calibration_window).map_err(ModelError::from)?;
    let n_test = global_test_count(subjects.len(), params.test_fraction);
    let stride = params.train.stride.max(1);

    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(seed, rep as u64);
            let mut order: Vec<usize> = (0..subjects.len()).collect();
            order.shuffle(&mut stream_rng(rep_seed, 0));
            let mut test: Vec<usize> = order[..n_test].to_vec();
            let mut train: Vec<usize> = order[n_test..].to_vec();
            test.sort_unstable();
            train.sort_unstable();

            let mut shapes = Vec::new();
            let mut labels = Vec::new();
            let mut train_frames = Vec::new();
            for &si in &train {
                let s = &subjects[si];
                let ctx = &contexts[&s.subject_id];
                for f in s.frames.iter().filter(|f| f.label.is_some()).step_by(stride) {
                    shapes.push(ctx.normalize_frame(f));
                    labels.push(scheme.class_of(f.label.expect("filtered")));
                    train_frames.push((f.subject_id.clone(), f.frame_index));
                }
            }
            let classifier = Classifier::fit(&shapes, &labels, scheme.n_classes(), &params.train, rep_seed)?;

            let mut records = Vec::new();
            for &si in &test {
                let s = &subjects[si];
                let own = Dataset::from_frames(s.frames.iter().cloned())?;
                let balanced = balanced_test_set(&own, scheme, derive_seed(rep_seed, 1 + si as u64))?;
                let frames = &balanced.subjects()[0].frames;
                records.extend(score_frames(&classifier, &contexts[&s.subject_id], frames, scheme)?);
            }
            Ok(RepetitionLog { repetition: rep, records, train_frames, excluded_subjects: Vec::new() })
        })
        .collect()
}

/// Candidate enrollment window: the first `enroll` frames of a run.
#[derive(Debug, Clone, Copy)]
struct Window {
    start: usize,
    /// Frame index of the window's last frame.
    last_index: u64,
}

/// Eligible enrollment windows per region for one subject.
fn eligible_windows(s: &SubjectStream, scheme: RegionScheme, params: &EvalParams) -> Vec<Vec<Window>> {
    let frames = &s.frames;
    let n_classes = scheme.n_classes();
    // Suffix class counts by position.
    let mut suffix = vec![vec![0usize; n_classes]; frames.len() + 1];
    for i in (0..frames.len()).rev() {
        suffix[i] = suffix[i + 1].clone();
        if let Some(r) = frames[i].label {
            suffix[i][scheme.class_of(r)] += 1;
        }
    }
    let mut out = vec![Vec::new(); 6];
    let mut start = 0;
    while start < frames.len() {
        let label = frames[start].label;
        let mut end = start + 1;
        while end < frames.len() && frames[end].label == label {
            end += 1;
        }
        if let Some(region) = label {
            if end - start >= params.enroll_frames {
                let last_index = frames[start + params.enroll_frames - 1].frame_index;
                let first_test = frames.partition_point(|f| f.frame_index < last_index + params.gap_frames);
                if suffix[first_test].iter().all(|&c| c >= params.min_test_frames) {
                    out[region.code() as usize].push(Window { start, last_index });
                }
            }
        }
        start = end;
    }
    out
}

/// Test records and training frames of one subject.
type SubjectResult = (Vec<FrameRecord>, Vec<(String, u64)>);

/// Per-frame logs of the user-based protocol. Subjects lacking an eligible
/// enrollment window for some region are excluded and listed in the log.
pub fn user_based_logs(
    dataset: &Dataset,
    scheme: RegionScheme,
    params: &EvalParams,
    reps: usize,
    seed: u64,
) -> Result<Vec<RepetitionLog>, EvalError> {
    if reps == 0 {
        return Err(EvalError::NoRepetitions);
    }
    let subjects = dataset.subjects();
    let contexts = compute_contexts(dataset, params.train.calibration_window).map_err(ModelError::from)?;
    let windows: Vec<Vec<Vec<Window>>> = subjects.par_iter().map(|s| eligible_windows(s, scheme, params)).collect();
    let excluded: Vec<String> = subjects
        .iter()
        .zip(&windows)
        .filter(|(_, w)| w.iter().any(|r| r.is_empty()))
        .map(|(s, _)| s.subject_id.clone())
        .collect();
    if excluded.len() == subjects.len() {
        return Err(EvalError::NoEligibleSubjects);
    }

    (0..reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = derive_seed(seed, rep as u64);
            let per_subject: Vec<Option<SubjectResult>> = subjects
                .par_iter()
                .enumerate()
                .map(|(si, s)| {
                    if windows[si].iter().any(|r| r.is_empty()) {
                        return Ok(None);
                    }
                    let subject_seed = derive_seed(rep_seed, si as u64);
                    let mut rng = stream_rng(subject_seed, 0);
                    let chosen: Vec<Window> = windows[si]
                        .iter()
                        .map(|cands| cands[rng.gen_range(0..cands.len())])
                        .collect();
                    let ctx = &contexts[&s.subject_id];
                    let mut shapes = Vec::new();
                    let mut labels = Vec::new();
                    let mut train_frames = Vec::new();
                    for w in &chosen {
                        for f in &s.frames[w.start..w.start + params.enroll_frames] {
                            shapes.push(ctx.normalize_frame(f));
                            labels.push(scheme.class_of(f.label.expect("runs are labeled")));
                            train_frames.push((f.subject_id.clone(), f.frame_index));
                        }
                    }
                    let classifier = Classifier::fit(&shapes, &labels, scheme.n_classes(), &params.train, subject_seed)?;
                    let last = chosen.iter().map(|w| w.last_index).max().expect("six windows");
                    let test: Vec<LandmarkFrame> = s
                        .frames
                        .iter()
                        .filter(|f| f.frame_index >= last + params.gap_frames && f.label.is_some())
                        .cloned()
                        .collect();
                    let balanced = balanced_test_set(&Dataset::from_frames(test)?, scheme, derive_seed(subject_seed, 1))?;
                    let records = score_frames(&classifier, ctx, &balanced.subjects()[0].frames, scheme)?;
                    Ok(Some((records, train_frames)))
                })
                .collect::<Result<_, EvalError>>()?;
            let mut records = Vec::new();
            let mut train_frames = Vec::new();
            for (r, t) in per_subject.into_iter().flatten() {
                records.extend(r);
                train_frames.extend(t);
            }
            Ok(RepetitionLog { repetition: rep, records, train_frames, excluded_subjects: excluded.clone() })
        })
        .collect()
}

pub fn run_global(
    dataset: &Dataset,
    scheme: RegionScheme,
    params: &EvalParams,
    threshold: f64,
    reps: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    check_threshold(threshold)?;
    let logs = global_logs(dataset, scheme, params, reps, seed)?;
    Ok(build_report(&logs, scheme, Protocol::Global, threshold))
}

pub fn run_user_based(
    dataset: &Dataset,
    scheme: RegionScheme,
    params: &EvalParams,
    threshold: f64,
    reps: usize,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    check_threshold(threshold)?;
    let logs = user_based_logs(dataset, scheme, params, reps, seed)?;
    Ok(build_report(&logs, scheme, Protocol::UserBased, threshold))
}

/// One row of the accuracy-vs-confidence curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    /// `None` when no repetition decided any frame at this threshold.
    pub mean_accuracy: Option<f64>,
    pub std_accuracy: Option<f64>,
    pub mean_decision_period_s: Option<f64>,
    pub decision_fraction: f64,
    pub decided_per_rep: Vec<usize>,
}

/// Re-filter fixed per-frame logs at each threshold.
pub fn sweep_logs(logs: &[RepetitionLog], scheme: RegionScheme, thresholds: &[f64]) -> Result<Vec<SweepPoint>, EvalError> {
    if thresholds.is_empty()
        || thresholds.iter().any(|t| t.is_nan() || *t < 1.0)
        || thresholds.windows(2).any(|w| w[0] > w[1])
    {
        return Err(EvalError::BadThresholds);
    }
    let n = scheme.n_classes();
    Ok(thresholds
        .iter()
        .map(|&t| {
            let sums: Vec<RepSummary> = logs.iter().map(|l| summarize_rep(l, n, t)).collect();
            let accs: Vec<f64> = sums.iter().filter_map(|s| s.accuracy()).collect();
            let periods: Vec<f64> = sums.iter().filter_map(|s| s.decision_period_s()).collect();
            let stats = mean_std(&accs);
            let evaluated: usize = sums.iter().map(|s| s.evaluated).sum();
            let decided: usize = sums.iter().map(|s| s.decided).sum();
            SweepPoint {
                threshold: t,
                mean_accuracy: stats.map(|s| s.0),
                std_accuracy: stats.map(|s| s.1),
                mean_decision_period_s: mean_std(&periods).map(|s| s.0),
                decision_fraction: if evaluated > 0 { decided as f64 / evaluated as f64 } else { 0.0 },
                decided_per_rep: sums.iter().map(|s| s.decided).collect(),
            }
        })
        .collect())
}

/// User-based accuracy-vs-confidence sweep: one training pass per
/// repetition, decisions re-filtered per threshold.
pub fn sweep_confidence(
    dataset: &Dataset,
    scheme: RegionScheme,
    params: &EvalParams,
    thresholds: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>, EvalError> {
    sweep_logs(&[], scheme, thresholds)?;
    let logs = user_based_logs(dataset, scheme, params, reps, seed)?;
    sweep_logs(&logs, scheme, thresholds)
}

/// `q`-quantile of the confidences in `logs` (nearest rank).
pub fn confidence_quantile(logs: &[RepetitionLog], q: f64) -> Option<f64> {
    let mut c: Vec<f64> = logs.iter().flat_map(|l| l.records.iter().map(|r| r.confidence)).collect();
    if c.is_empty() {
        return None;
    }
    c.sort_by(f64::total_cmp);
    let idx = ((q.clamp(0.0, 1.0) * c.len() as f64).ceil() as usize).clamp(1, c.len()) - 1;
    Some(c[idx])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(subject: &str, truth: usize, pred: usize, conf: f64) -> FrameRecord {
        FrameRecord {
            subject: subject.into(),
            frame_index: 0,
            true_region: GazeRegion::ALL[truth],
            true_class: truth,
            predicted: pred,
            confidence: conf,
        }
    }

    fn log(records: Vec<FrameRecord>) -> RepetitionLog {
        RepetitionLog { repetition: 0, records, train_frames: vec![], excluded_subjects: vec![] }
    }

    #[test]
    fn identity_confusion_collapses_to_fifty_ten() {
        let mut m = ConfusionMatrix::new(6);
        for c in 0..6 {
            for _ in 0..10 {
                m.add(c, c);
            }
        }
        let two = m.collapse_to_two_class();
        assert_eq!(two.get(0, 0), 50);
        assert_eq!(two.get(1, 1), 10);
        assert_eq!(two.total(), 60);
        assert_eq!(two.accuracy(), Some(1.0));
    }

    #[test]
    fn road_predicted_left_is_two_class_correct() {
        let (t, p) = collapse_pair(GazeRegion::Road.code() as usize, GazeRegion::Left.code() as usize);
        assert_eq!(t, p);
        let (t, p) = collapse_pair(0, 1);
        assert_ne!(t, p);
    }

    #[test]
    fn summary_threshold_filters_and_periods() {
        let l = log(vec![rec("a", 0, 0, 5.0), rec("a", 1, 2, 1.0), rec("b", 3, 3, f64::INFINITY), rec("b", 4, 4, 2.0)]);
        let s1 = summarize_rep(&l, 6, 1.0);
        assert_eq!((s1.decided, s1.evaluated), (4, 4));
        assert_eq!(s1.accuracy(), Some(0.75));
        let s3 = summarize_rep(&l, 6, 3.0);
        assert_eq!(s3.decided, 2);
        assert_eq!(s3.accuracy(), Some(1.0));
        assert!((s3.decision_period_s().unwrap() - 4.0 / 30.0 / 2.0).abs() < 1e-15);
        assert_eq!(summarize_rep(&l, 6, f64::MAX).decided, 1);
    }

    #[test]
    fn report_aggregates_and_checks_two_class() {
        let l = log(vec![rec("a", 0, 4, 3.0), rec("a", 1, 1, 3.0), rec("a", 2, 3, 3.0), rec("a", 5, 0, 1.0)]);
        let r = build_report(&[l.clone(), l], RegionScheme::SixClass, Protocol::UserBased, 2.0);
        assert_eq!(r.mean_accuracy, Some(1.0 / 3.0));
        assert_eq!(r.std_accuracy, Some(0.0));
        assert_eq!(r.decided_frames, 6);
        assert!((r.decision_fraction - 0.75).abs() < 1e-15);
        assert_eq!(r.collapsed_two_class_accuracy, Some(1.0));
        assert_eq!(r.per_subject_accuracy["a"], (1.0 / 3.0, 0.0));
        assert_eq!(r.mean_confusion.iter().sum::<f64>(), 3.0);
    }

    #[test]
    fn sweep_flags_empty_thresholds_and_validates() {
        let l = log(vec![rec("a", 0, 0, 2.0), rec("a", 1, 0, 1.0)]);
        let pts = sweep_logs(std::slice::from_ref(&l), RegionScheme::SixClass, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(pts[0].decided_per_rep, vec![2]);
        assert_eq!(pts[1].mean_accuracy, Some(1.0));
        assert_eq!(pts[2].mean_accuracy, None);
        assert_eq!(pts[2].mean_decision_period_s, None);
        assert!(sweep_logs(std::slice::from_ref(&l), RegionScheme::SixClass, &[2.0, 1.0]).is_err());
        assert!(sweep_logs(&[l], RegionScheme::SixClass, &[0.5]).is_err());
    }

    #[test]
    fn quantile_nearest_rank() {
        let l = log((1..=10).map(|i| rec("a", 0, 0, i as f64)).collect());
        assert_eq!(confidence_quantile(std::slice::from_ref(&l), 0.5), Some(5.0));
        assert_eq!(confidence_quantile(std::slice::from_ref(&l), 0.0), Some(1.0));
        assert_eq!(confidence_quantile(&[l], 1.0), Some(10.0));
    }

    #[test]
    fn forty_ten_split() {
        assert_eq!(global_test_count(50, 0.2), 10);
        assert_eq!(global_test_count(12, 0.2), 2);
        assert_eq!(global_test_count(2, 0.2), 1);
    }
}
