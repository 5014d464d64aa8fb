//! Trained gaze model: feature plan, per-subject normalization contexts and
//! the forest, plus the single-file container they are persisted in.
//!
//! Container layout (little endian):
//!
//! | bytes | content                         |
//! |-------|---------------------------------|
//! | 4     | magic `GZRM`                    |
//! | 4     | container version (`u32`)       |
//! | 8     | payload length (`u64`)          |
//! | 4     | CRC-32 of the payload           |
//! | n     | bincode-encoded model body      |

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::decide::{decide, DecideError, Verdict};
use crate::features::{mean_shape, select_landmarks, FeatureError, FeaturePlan, FeatureVector, RfeParams, Shape};
use crate::forest::{Forest, ForestError, ForestParams};
use crate::normalize::{NormalizationContext, NormalizeError, CALIBRATION_FRAMES};
use crate::rng::derive_seed;
use crate::types::{LandmarkFrame, ProbVector, RegionScheme};

pub const MODEL_MAGIC: &[u8; 4] = b"GZRM";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a model file")]
    BadMagic,
    #[error("unsupported model version {0} (expected {MODEL_VERSION})")]
    Version(u32),
    #[error("model file truncated")]
    Truncated,
    #[error("model checksum mismatch")]
    Checksum,
    #[error("model decode failed: {0}")]
    Decode(String),
    #[error("no labeled training frames")]
    NoTrainingData,
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Decide(#[from] DecideError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainParams {
    pub forest: ForestParams,
    /// Trees per elimination round.
    pub rfe_trees: usize,
    /// Landmarks kept for the triangulation.
    pub keep: usize,
    pub calibration_window: usize,
    /// Use every `stride`-th labeled frame for training.
    pub stride: usize,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            forest: ForestParams::default(),
            rfe_trees: 100,
            keep: crate::features::DEFAULT_SELECTED,
            calibration_window: CALIBRATION_FRAMES,
            stride: 1,
        }
    }
}

/// Feature plan and forest fitted together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classifier {
    pub plan: FeaturePlan,
    pub forest: Forest,
}

impl Classifier {
    /// Landmark selection, plan on the mean training shape, then the forest.
    /// `seed` overrides the seeds inside `params`.
    pub fn fit(shapes: &[Shape], labels: &[usize], n_classes: usize, params: &TrainParams, seed: u64) -> Result<Self, ModelError> {
        if shapes.is_empty() {
            return Err(ModelError::NoTrainingData);
        }
        let rfe = RfeParams {
            keep: params.keep,
            forest: ForestParams {
                n_trees: params.rfe_trees,
                seed: derive_seed(seed, 0x5e1ec7),
                ..params.forest.clone()
            },
        };
        let selection = select_landmarks(shapes, labels, n_classes, &rfe)?;
        let reference = mean_shape(shapes).ok_or(ModelError::NoTrainingData)?;
        let plan = FeaturePlan::build(&selection.selected, &reference)?;
        let rows: Vec<FeatureVector> = shapes.par_iter().map(|s| plan.extract(s)).collect();
        let fp = ForestParams { seed: derive_seed(seed, 0xf0e5), ..params.forest.clone() };
        let forest = Forest::train(&rows, labels, n_classes, &fp)?;
        Ok(Classifier { plan, forest })
    }

    pub fn predict_proba(&self, shape: &Shape) -> ProbVector {
        let v = self.plan.extract(shape);
        self.forest
            .predict_proba(v.as_slice())
            .expect("plan and forest share the feature length")
    }

    pub fn classify(&self, shape: &Shape, threshold: f64) -> Result<Verdict, DecideError> {
        decide(self.predict_proba(shape), threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GazeModel {
    pub scheme: RegionScheme,
    pub classifier: Classifier,
    pub contexts: BTreeMap<String, NormalizationContext>,
    pub calibration_window: usize,
}

/// Normalization contexts for every subject of a dataset.
pub fn compute_contexts(dataset: &Dataset, window: usize) -> Result<BTreeMap<String, NormalizationContext>, NormalizeError> {
    dataset
        .subjects()
        .par_iter()
        .map(|s| NormalizationContext::compute(&s.frames, window).map(|c| (s.subject_id.clone(), c)))
        .collect()
}

impl GazeModel {
    /// Train on every labeled frame of `dataset` (subsampled by `stride`).
    pub fn train(dataset: &Dataset, scheme: RegionScheme, params: &TrainParams, seed: u64) -> Result<Self, ModelError> {
        let contexts = compute_contexts(dataset, params.calibration_window)?;
        let stride = params.stride.max(1);
        let mut shapes = Vec::new();
        let mut labels = Vec::new();
        for s in dataset.subjects() {
            let ctx = &contexts[&s.subject_id];
            for f in s.frames.iter().filter(|f| f.label.is_some()).step_by(stride) {
                shapes.push(ctx.normalize_frame(f));
                labels.push(scheme.class_of(f.label.expect("filtered")));
            }
        }
        let classifier = Classifier::fit(&shapes, &labels, scheme.n_classes(), params, seed)?;
        Ok(GazeModel { scheme, classifier, contexts, calibration_window: params.calibration_window })
    }

    /// Stored context for a known subject, else one computed from `frames`.
    pub fn context_for(&self, subject: &str, frames: &[LandmarkFrame]) -> Result<NormalizationContext, NormalizeError> {
        match self.contexts.get(subject) {
            Some(c) => Ok(c.clone()),
            None => NormalizationContext::compute(frames, self.calibration_window),
        }
    }

    pub fn classify_frame(&self, ctx: &NormalizationContext, frame: &LandmarkFrame, threshold: f64) -> Result<Verdict, DecideError> {
        self.classifier.classify(&ctx.normalize_frame(frame), threshold)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn write(&self, mut w: impl Write) -> Result<(), ModelError> {
        let payload = bincode::serialize(self).map_err(|e| ModelError::Decode(e.to_string()))?;
        w.write_all(MODEL_MAGIC)?;
        w.write_all(&MODEL_VERSION.to_le_bytes())?;
        w.write_all(&(payload.len() as u64).to_le_bytes())?;
        w.write_all(&crc32fast::hash(&payload).to_le_bytes())?;
        w.write_all(&payload)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn read(mut r: impl Read) -> Result<Self, ModelError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        if bytes.len() < 4 || &bytes[..4] != MODEL_MAGIC {
            return Err(if bytes.len() < 4 { ModelError::Truncated } else { ModelError::BadMagic });
        }
        if bytes.len() < 20 {
            return Err(ModelError::Truncated);
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != MODEL_VERSION {
            return Err(ModelError::Version(version));
        }
        let len = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes")) as usize;
        let crc = u32::from_le_bytes(bytes[16..20].try_into().expect("4 bytes"));
        let payload = &bytes[20..];
        if payload.len() < len {
            return Err(ModelError::Truncated);
        }
        if payload.len() > len {
            return Err(ModelError::Decode("trailing bytes after payload".into()));
        }
        if crc32fast::hash(payload) != crc {
            return Err(ModelError::Checksum);
        }
        bincode::deserialize(payload).map_err(|e| ModelError::Decode(e.to_string()))
    }
}
