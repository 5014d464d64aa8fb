//! Per-stage latency benchmark on a single thread.
//!
//! Stages: `normalize` (raw frame to normalized shape), `triangulate_angles`
//! (angle block over the fixed plan triangles), `extract` (full feature
//! vector), `predict` (forest probabilities) and `decide` (confidence and
//! threshold test).

use std::hint::black_box;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decide::{decide, DecideError};
use crate::model::GazeModel;
use crate::normalize::{NormalizationContext, NormalizeError};
use crate::types::LandmarkFrame;

/// Per-stage real-time budget.
pub const BUDGET_MS: f64 = 10.0;

pub const STAGES: [&str; 5] = ["normalize", "triangulate_angles", "extract", "predict", "decide"];

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("iterations must be positive")]
    NoIterations,
    #[error("no frames to benchmark")]
    NoFrames,
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Decide(#[from] DecideError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub samples: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub max_ms: f64,
}

impl StageTiming {
    fn from_samples(stage: &str, mut ms: Vec<f64>) -> Self {
        ms.sort_by(f64::total_cmp);
        let n = ms.len();
        let p95 = ms[((0.95 * n as f64).ceil() as usize).clamp(1, n) - 1];
        StageTiming {
            stage: stage.to_string(),
            samples: n,
            mean_ms: ms.iter().sum::<f64>() / n as f64,
            p95_ms: p95,
            max_ms: ms[n - 1],
        }
    }

    pub fn within_budget(&self) -> bool {
        self.mean_ms < BUDGET_MS
    }
}

/// Time every stage `iterations` times, cycling over `frames`. The first
/// 10% of iterations are warm-up and are not reported.
pub fn bench(model: &GazeModel, frames: &[LandmarkFrame], iterations: usize, threshold: f64) -> Result<Vec<StageTiming>, BenchError> {
    if iterations == 0 {
        return Err(BenchError::NoIterations);
    }
    if frames.is_empty() {
        return Err(BenchError::NoFrames);
    }
    let ctx = match model.contexts.get(&frames[0].subject_id) {
        Some(c) => c.clone(),
        None => NormalizationContext::compute(frames, model.calibration_window)?,
    };
    let plan = &model.classifier.plan;
    let forest = &model.classifier.forest;
    let warmup = iterations / 10;
    let mut samples: Vec<Vec<f64>> = vec![Vec::with_capacity(iterations - warmup); STAGES.len()];
    let mut angles = Vec::with_capacity(plan.feature_len());

    for i in 0..iterations {
        let frame = &frames[i % frames.len()];
        let mut lap = [0.0f64; 5];

        let t = Instant::now();
        let shape = black_box(ctx.normalize_frame(black_box(frame)));
        lap[0] = t.elapsed().as_secs_f64() * 1e3;

        angles.clear();
        let t = Instant::now();
        plan.push_angles(black_box(&shape), &mut angles);
        black_box(&angles);
        lap[1] = t.elapsed().as_secs_f64() * 1e3;

        let t = Instant::now();
        let features = black_box(plan.extract(black_box(&shape)));
        lap[2] = t.elapsed().as_secs_f64() * 1e3;

        let t = Instant::now();
        let probs = black_box(forest.predict_proba(features.as_slice()).expect("plan matches forest"));
        lap[3] = t.elapsed().as_secs_f64() * 1e3;

        let t = Instant::now();
        black_box(decide(probs, threshold)?);
        lap[4] = t.elapsed().as_secs_f64() * 1e3;

        if i >= warmup {
            for (s, v) in samples.iter_mut().zip(lap) {
                s.push(v);
            }
        }
    }
    Ok(STAGES
        .iter()
        .zip(samples)
        .map(|(name, s)| StageTiming::from_samples(name, s))
        .collect())
}

/// Run [`bench`] inside a dedicated one-thread pool.
pub fn bench_single_worker(
    model: &GazeModel,
    frames: &[LandmarkFrame],
    iterations: usize,
    threshold: f64,
) -> Result<Vec<StageTiming>, BenchError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("one-thread pool");
    pool.install(|| bench(model, frames, iterations, threshold))
}

/// Plain-text timing table with a PASS/FAIL column against the budget.
pub fn format_table(timings: &[StageTiming]) -> String {
    let mut out = format!(
        "{:<20} {:>8} {:>10} {:>10} {:>10}  budget\n",
        "stage", "samples", "mean_ms", "p95_ms", "max_ms"
    );
    for t in timings {
        out.push_str(&format!(
            "{:<20} {:>8} {:>10.4} {:>10.4} {:>10.4}  {}\n",
            t.stage,
            t.samples,
            t.mean_ms,
            t.p95_ms,
            t.max_ms,
            if t.within_budget() { "PASS" } else { "FAIL" }
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::ForestParams;
    use crate::model::TrainParams;
    use crate::synth::{generate, GenConfig};
    use crate::types::RegionScheme;

    fn model_and_frames() -> (GazeModel, Vec<LandmarkFrame>) {
        let cfg = GenConfig { n_subjects: 1, frames_per_glance: 10, glances_per_region: 2, seed: 5, ..GenConfig::default() };
        let ds = generate(&cfg).unwrap();
        let params = TrainParams { forest: ForestParams::default().with_trees(4), rfe_trees: 2, stride: 3, ..TrainParams::default() };
        let m = GazeModel::train(&ds, RegionScheme::SixClass, &params, 1).unwrap();
        (m, ds.subjects()[0].frames.clone())
    }

    #[test]
    fn warmup_is_discarded() {
        let (m, frames) = model_and_frames();
        let t = bench_single_worker(&m, &frames, 200, 1.0).unwrap();
        assert_eq!(t.len(), 5);
        for s in &t {
            assert_eq!(s.samples, 180);
            assert!(s.p95_ms <= s.max_ms);
            assert!(s.mean_ms >= 0.0);
        }
        assert!(format_table(&t).contains("triangulate_angles"));
    }

    #[test]
    fn zero_iterations_is_an_error() {
        let (m, frames) = model_and_frames();
        assert!(matches!(bench(&m, &frames, 0, 1.0), Err(BenchError::NoIterations)));
        assert!(matches!(bench(&m, &[], 10, 1.0), Err(BenchError::NoFrames)));
    }
}
