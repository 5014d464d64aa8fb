//! Per-subject normalization against the average face box of a calibration
//! window at the start of the subject's stream.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{LandmarkFrame, Point2, N_LANDMARKS};

/// Default calibration window: the first 120 s of video at 30 fps.
pub const CALIBRATION_FRAMES: usize = 3600;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormalizeError {
    #[error("subject {0:?}: no usable bounding box in the calibration window")]
    NoUsableFrames(String),
    #[error("subject {subject:?}: mean face box is degenerate ({width}x{height})")]
    DegenerateBox { subject: String, width: f64, height: f64 },
}

/// A subject's mean face box, stored as center and size in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationContext {
    pub subject_id: String,
    pub center_x: f64,
    pub center_y: f64,
    pub width: f64,
    pub height: f64,
    pub window_frames: usize,
}

impl NormalizationContext {
    /// Average the boxes of the first `window` frames. Frames whose box is
    /// degenerate are skipped rather than imputed.
    pub fn compute(frames: &[LandmarkFrame], window: usize) -> Result<Self, NormalizeError> {
        let subject = frames
            .first()
            .map(|f| f.subject_id.clone())
            .unwrap_or_default();
        let (mut cx, mut cy, mut w, mut h) = (0.0, 0.0, 0.0, 0.0);
        let mut used = 0usize;
        for frame in frames.iter().take(window) {
            let b = frame.effective_bbox();
            if b.is_degenerate() {
                continue;
            }
            let (x, y) = b.center();
            cx += x;
            cy += y;
            w += b.width;
            h += b.height;
            used += 1;
        }
        if used == 0 {
            return Err(NormalizeError::NoUsableFrames(subject));
        }
        let n = used as f64;
        let ctx = NormalizationContext {
            subject_id: subject,
            center_x: cx / n,
            center_y: cy / n,
            width: w / n,
            height: h / n,
            window_frames: used,
        };
        if !(ctx.width > 0.0 && ctx.height > 0.0) {
            return Err(NormalizeError::DegenerateBox {
                subject: ctx.subject_id,
                width: ctx.width,
                height: ctx.height,
            });
        }
        Ok(ctx)
    }

    pub fn normalize_point(&self, p: Point2) -> Point2 {
        Point2::new((p.x - self.center_x) / self.width, (p.y - self.center_y) / self.height)
    }

    pub fn normalize_frame(&self, frame: &LandmarkFrame) -> [Point2; N_LANDMARKS] {
        self.normalize_landmarks(frame.landmarks())
    }

    /// Same as [`normalize_frame`](Self::normalize_frame) on a bare landmark slice.
    pub fn normalize_landmarks(&self, landmarks: &[Point2]) -> [Point2; N_LANDMARKS] {
        let mut out = [Point2::default(); N_LANDMARKS];
        for (o, &p) in out.iter_mut().zip(landmarks) {
            *o = self.normalize_point(p);
        }
        out
    }
}
