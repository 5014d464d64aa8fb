//! C ABI over the gaze-region classifier.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Every fallible call returns a
//! [`GzStatus`]; on failure a description is available from
//! [`gz_last_error`] on the same thread. Landmarks are passed as 112
//! doubles per frame, `x0, y0, x1, y1, ...`, in the 56-point order.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gazeregion::types::N_LANDMARKS;
use gazeregion::{GazeModel, LandmarkFrame, NormalizationContext, Point2, ProbVector};

/// Values per frame in landmark buffers.
pub const GZ_FRAME_VALUES: usize = 112;
const _: () = assert!(GZ_FRAME_VALUES == 2 * N_LANDMARKS);
/// Largest class count of any scheme.
pub const GZ_MAX_CLASSES: usize = 6;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GzStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    BadModel = 4,
    Normalize = 5,
    Panic = 6,
}

/// Trained model handle.
pub struct GzModel(GazeModel);

/// Per-subject normalization handle.
pub struct GzContext(NormalizationContext);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct GzDecision {
    pub predicted: u32,
    pub n_classes: u32,
    /// Ratio of the top two probabilities; `+inf` when only one is nonzero.
    pub confidence: f64,
    /// 1 when the confidence reached the threshold, else 0.
    pub decided: u8,
    /// First `n_classes` entries are valid.
    pub probs: [f64; GZ_MAX_CLASSES],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let s = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(s).expect("nul bytes removed"));
}

fn guard(f: impl FnOnce() -> Result<(), (GzStatus, String)>) -> GzStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GzStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GzStatus::Panic
        }
    }
}

fn null() -> (GzStatus, String) {
    (GzStatus::NullPointer, "null pointer argument".into())
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, (GzStatus, String)> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (GzStatus::InvalidArgument, "string is not UTF-8".into()))
}

fn frame_from(values: &[f64], index: u64) -> Result<LandmarkFrame, (GzStatus, String)> {
    let pts = values.chunks_exact(2).map(|c| Point2::new(c[0], c[1])).collect();
    LandmarkFrame::new("ffi", index, pts, None).map_err(|e| (GzStatus::InvalidArgument, e.to_string()))
}

/// Description of the last error on this thread. Valid until the next
/// failing call on the same thread; never null.
#[no_mangle]
pub extern "C" fn gz_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gz_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gz_model_load(path: *const c_char, out: *mut *mut GzModel) -> GzStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let path = c_str(path)?;
        let model = GazeModel::load(path).map_err(|e| {
            let status = match e {
                gazeregion::model::ModelError::Io(_) => GzStatus::Io,
                _ => GzStatus::BadModel,
            };
            (status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(GzModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`gz_model_load`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gz_model_free(model: *mut GzModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gz_model_n_classes(model: *const GzModel, out: *mut u32) -> GzStatus {
    guard(|| {
        let (m, out) = (model.as_ref().ok_or_else(null)?, out.as_mut().ok_or_else(null)?);
        *out = m.0.scheme.n_classes() as u32;
        Ok(())
    })
}

/// Context stored in the model for a training subject.
///
/// # Safety
/// `model`, `subject` and `out` must be valid; `subject` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn gz_context_from_model(model: *const GzModel, subject: *const c_char, out: *mut *mut GzContext) -> GzStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        *out = ptr::null_mut();
        let m = model.as_ref().ok_or_else(null)?;
        let subject = c_str(subject)?;
        let ctx = m.0.contexts.get(subject).ok_or_else(|| {
            (GzStatus::InvalidArgument, format!("subject {subject:?} not in model"))
        })?;
        *out = Box::into_raw(Box::new(GzContext(ctx.clone())));
        Ok(())
    })
}

/// Calibrate a context from `n_frames` consecutive frames of one subject
/// (`n_frames * GZ_FRAME_VALUES` doubles). The model's calibration window
/// caps how many are used.
///
/// # Safety
/// `landmarks` must point to `n_frames * GZ_FRAME_VALUES` doubles.
#[no_mangle]
pub unsafe extern "C" fn gz_context_from_frames(
    model: *const GzModel,
    landmarks: *const f64,
    n_frames: usize,
    out: *mut *mut GzContext,
) -> GzStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        *out = ptr::null_mut();
        let m = model.as_ref().ok_or_else(null)?;
        if landmarks.is_null() {
            return Err(null());
        }
        if n_frames == 0 {
            return Err((GzStatus::InvalidArgument, "no frames".into()));
        }
        let values = std::slice::from_raw_parts(landmarks, n_frames * GZ_FRAME_VALUES);
        let frames = values
            .chunks_exact(GZ_FRAME_VALUES)
            .enumerate()
            .map(|(i, v)| frame_from(v, i as u64))
            .collect::<Result<Vec<_>, _>>()?;
        let ctx = NormalizationContext::compute(&frames, m.0.calibration_window)
            .map_err(|e| (GzStatus::Normalize, e.to_string()))?;
        *out = Box::into_raw(Box::new(GzContext(ctx)));
        Ok(())
    })
}

/// # Safety
/// `ctx` must come from a `gz_context_*` constructor and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gz_context_free(ctx: *mut GzContext) {
    if !ctx.is_null() {
        drop(Box::from_raw(ctx));
    }
}

/// Classify one frame of `GZ_FRAME_VALUES` raw landmark coordinates.
/// `threshold` must be at least 1.
///
/// # Safety
/// All pointers must be valid; `landmarks` must hold `GZ_FRAME_VALUES` doubles.
#[no_mangle]
pub unsafe extern "C" fn gz_classify(
    model: *const GzModel,
    ctx: *const GzContext,
    landmarks: *const f64,
    threshold: f64,
    out: *mut GzDecision,
) -> GzStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(null)?;
        let c = ctx.as_ref().ok_or_else(null)?;
        let out = out.as_mut().ok_or_else(null)?;
        if landmarks.is_null() {
            return Err(null());
        }
        let frame = frame_from(std::slice::from_raw_parts(landmarks, GZ_FRAME_VALUES), 0)?;
        let verdict = m
            .0
            .classify_frame(&c.0, &frame, threshold)
            .map_err(|e| (GzStatus::InvalidArgument, e.to_string()))?;
        let d = verdict.decision();
        let mut probs = [0.0; GZ_MAX_CLASSES];
        probs[..d.probs.len()].copy_from_slice(d.probs.as_slice());
        *out = GzDecision {
            predicted: d.predicted as u32,
            n_classes: d.probs.len() as u32,
            confidence: d.confidence,
            decided: u8::from(verdict.is_decided()),
            probs,
        };
        Ok(())
    })
}

/// Confidence of an arbitrary probability vector of length `n` (>= 2).
///
/// # Safety
/// `probs` must point to `n` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gz_confidence(probs: *const f64, n: usize, out: *mut f64) -> GzStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        if probs.is_null() {
            return Err(null());
        }
        let pv = ProbVector::new(std::slice::from_raw_parts(probs, n).to_vec())
            .map_err(|e| (GzStatus::InvalidArgument, e.to_string()))?;
        *out = gazeregion::confidence(&pv).map_err(|e| (GzStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}
