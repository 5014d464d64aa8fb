//! Shared domain vocabulary: gaze regions, landmark frames, probability
//! vectors and the two region partitions used for evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Number of facial landmarks in one frame.
pub const N_LANDMARKS: usize = 56;

/// Capture rate of the landmark streams, frames per second.
pub const FRAME_RATE: f64 = 30.0;

/// Errors raised when constructing domain values.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TypeError {
    #[error("expected {N_LANDMARKS} landmarks, got {0}")]
    LandmarkCount(usize),
    #[error("landmark {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("bounding box must have positive width and height, got {width}x{height}")]
    EmptyBox { width: f64, height: f64 },
    #[error("unknown gaze region code {0:?}")]
    UnknownRegion(String),
    #[error("unknown region scheme {0:?}")]
    UnknownScheme(String),
    #[error("probability vector invalid: {0}")]
    BadProbs(String),
}

/// One of the six in-cabin glance regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GazeRegion {
    Road,
    CenterStack,
    InstrumentCluster,
    RearviewMirror,
    Left,
    Right,
}

impl GazeRegion {
    pub const ALL: [GazeRegion; 6] = [
        GazeRegion::Road,
        GazeRegion::CenterStack,
        GazeRegion::InstrumentCluster,
        GazeRegion::RearviewMirror,
        GazeRegion::Left,
        GazeRegion::Right,
    ];

    /// Stable integer encoding, 0 through 5.
    pub fn code(self) -> u8 {
        match self {
            GazeRegion::Road => 0,
            GazeRegion::CenterStack => 1,
            GazeRegion::InstrumentCluster => 2,
            GazeRegion::RearviewMirror => 3,
            GazeRegion::Left => 4,
            GazeRegion::Right => 5,
        }
    }

    pub fn from_code(code: u8) -> Option<GazeRegion> {
        GazeRegion::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            GazeRegion::Road => "road",
            GazeRegion::CenterStack => "center_stack",
            GazeRegion::InstrumentCluster => "instrument_cluster",
            GazeRegion::RearviewMirror => "rearview_mirror",
            GazeRegion::Left => "left",
            GazeRegion::Right => "right",
        }
    }
}

impl fmt::Display for GazeRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the six regions are partitioned into classifier classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionScheme {
    /// One class per region, identity mapping onto 0..6.
    SixClass,
    /// Center stack versus everything else ("driving-related").
    TwoClass,
}

impl RegionScheme {
    pub fn n_classes(self) -> usize {
        match self {
            RegionScheme::SixClass => 6,
            RegionScheme::TwoClass => 2,
        }
    }

    pub fn class_of(self, region: GazeRegion) -> usize {
        match self {
            RegionScheme::SixClass => region.code() as usize,
            RegionScheme::TwoClass => usize::from(region == GazeRegion::CenterStack),
        }
    }

    pub fn class_name(self, class: usize) -> &'static str {
        match self {
            RegionScheme::SixClass => GazeRegion::ALL[class].name(),
            RegionScheme::TwoClass => {
                if class == 1 {
                    "center_stack"
                } else {
                    "driving_related"
                }
            }
        }
    }
}

impl fmt::Display for RegionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionScheme::SixClass => f.write_str("six"),
            RegionScheme::TwoClass => f.write_str("two"),
        }
    }
}

impl FromStr for RegionScheme {
    type Err = TypeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "six" | "6" | "six-class" => Ok(RegionScheme::SixClass),
            "two" | "2" | "two-class" => Ok(RegionScheme::TwoClass),
            other => Err(TypeError::UnknownScheme(other.to_string())),
        }
    }
}

/// A 2D point in pixel or normalized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }
}

/// Axis-aligned box, `(x_min, y_min, width, height)` in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub x_min: f64,
    pub y_min: f64,
    pub width: f64,
    pub height: f64,
}

impl BBox {
    pub fn center(&self) -> (f64, f64) {
        (self.x_min + self.width / 2.0, self.y_min + self.height / 2.0)
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.width > 0.0 && self.height > 0.0)
    }
}

/// Tight bounding box of a landmark set. Degenerate boxes are returned as-is.
pub fn bbox_from_landmarks(landmarks: &[Point2]) -> BBox {
    let mut x_min = f64::INFINITY;
    let mut y_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for p in landmarks {
        x_min = x_min.min(p.x);
        y_min = y_min.min(p.y);
        x_max = x_max.max(p.x);
        y_max = y_max.max(p.y);
    }
    BBox {
        x_min,
        y_min,
        width: x_max - x_min,
        height: y_max - y_min,
    }
}

/// One timestamped 56-point observation of a subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkFrame {
    pub subject_id: String,
    pub frame_index: u64,
    timestamp_s: Option<f64>,
    landmarks: Vec<Point2>,
    bbox: Option<BBox>,
    pub label: Option<GazeRegion>,
}

impl LandmarkFrame {
    pub fn new(
        subject_id: impl Into<String>,
        frame_index: u64,
        landmarks: Vec<Point2>,
        label: Option<GazeRegion>,
    ) -> Result<Self, TypeError> {
        if landmarks.len() != N_LANDMARKS {
            return Err(TypeError::LandmarkCount(landmarks.len()));
        }
        if let Some(i) = landmarks
            .iter()
            .position(|p| !(p.x.is_finite() && p.y.is_finite()))
        {
            return Err(TypeError::NonFinite(i));
        }
        Ok(LandmarkFrame {
            subject_id: subject_id.into(),
            frame_index,
            timestamp_s: None,
            landmarks,
            bbox: None,
            label,
        })
    }

    /// Attach an upstream face box.
    pub fn with_bbox(mut self, bbox: BBox) -> Result<Self, TypeError> {
        if bbox.is_degenerate() {
            return Err(TypeError::EmptyBox {
                width: bbox.width,
                height: bbox.height,
            });
        }
        self.bbox = Some(bbox);
        Ok(self)
    }

    /// Override the frame-index derived timestamp.
    pub fn with_timestamp(mut self, seconds: f64) -> Self {
        self.timestamp_s = Some(seconds);
        self
    }

    pub fn landmarks(&self) -> &[Point2] {
        &self.landmarks
    }

    pub fn bbox(&self) -> Option<BBox> {
        self.bbox
    }

    /// Upstream box if present, else the tight box around the landmarks.
    pub fn effective_bbox(&self) -> BBox {
        self.bbox
            .unwrap_or_else(|| bbox_from_landmarks(&self.landmarks))
    }

    pub fn timestamp_s(&self) -> f64 {
        self.timestamp_s
            .unwrap_or(self.frame_index as f64 / FRAME_RATE)
    }

    /// Apply `p -> p * scale + (dx, dy)` to every landmark and the box.
    pub fn transformed(&self, scale: f64, dx: f64, dy: f64) -> LandmarkFrame {
        let mut out = self.clone();
        for p in &mut out.landmarks {
            p.x = p.x * scale + dx;
            p.y = p.y * scale + dy;
        }
        if let Some(b) = &mut out.bbox {
            b.x_min = b.x_min * scale + dx;
            b.y_min = b.y_min * scale + dy;
            b.width *= scale;
            b.height *= scale;
        }
        out
    }
}

/// Per-class probabilities summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self, TypeError> {
        if probs.is_empty() {
            return Err(TypeError::BadProbs("empty".into()));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(TypeError::BadProbs("entry outside [0, 1]".into()));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TypeError::BadProbs(format!("sum is {sum}")));
        }
        Ok(ProbVector(probs))
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        ProbVector(probs)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Index of the largest entry, lowest index on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.0.iter().enumerate() {
            if p > self.0[best] {
                best = i;
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn cloud(points: &[(f64, f64)]) -> Vec<Point2> {
        points.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    #[test]
    fn region_codes_round_trip() {
        for r in GazeRegion::ALL {
            assert_eq!(GazeRegion::from_code(r.code()), Some(r));
            let json = serde_json::to_string(&r).unwrap();
            assert_eq!(serde_json::from_str::<GazeRegion>(&json).unwrap(), r);
        }
        assert_eq!(GazeRegion::from_code(6), None);
    }

    #[test]
    fn two_class_maps_only_center_stack_to_one() {
        let ones: Vec<_> = GazeRegion::ALL
            .iter()
            .filter(|r| RegionScheme::TwoClass.class_of(**r) == 1)
            .collect();
        assert_eq!(ones, vec![&GazeRegion::CenterStack]);
        for r in GazeRegion::ALL {
            assert_eq!(RegionScheme::SixClass.class_of(r), r.code() as usize);
        }
    }

    #[test]
    fn bbox_of_coincident_points_is_degenerate() {
        let pts = vec![Point2::new(5.0, 7.0); N_LANDMARKS];
        let b = bbox_from_landmarks(&pts);
        assert_eq!(b, BBox { x_min: 5.0, y_min: 7.0, width: 0.0, height: 0.0 });
        assert!(b.is_degenerate());
    }

    #[test]
    fn bbox_dominated_by_corners() {
        let mut pts = cloud(&[(0.0, 0.0), (2.0, 0.0), (0.0, 4.0)]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        while pts.len() < N_LANDMARKS {
            pts.push(Point2::new(rng.gen_range(0.1..1.9), rng.gen_range(0.1..3.9)));
        }
        let b = bbox_from_landmarks(&pts);
        assert_eq!(b, BBox { x_min: 0.0, y_min: 0.0, width: 2.0, height: 4.0 });
    }

    #[test]
    fn bbox_matches_direct_min_max() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let pts: Vec<Point2> = (0..N_LANDMARKS)
                .map(|_| Point2::new(rng.gen_range(-500.0..500.0), rng.gen_range(-500.0..500.0)))
                .collect();
            let xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.y).collect();
            let min_x = xs.iter().cloned().fold(f64::MAX, f64::min);
            let max_x = xs.iter().cloned().fold(f64::MIN, f64::max);
            let min_y = ys.iter().cloned().fold(f64::MAX, f64::min);
            let max_y = ys.iter().cloned().fold(f64::MIN, f64::max);
            let b = bbox_from_landmarks(&pts);
            assert_eq!((b.x_min, b.y_min), (min_x, min_y));
            assert_eq!(b.width, max_x - min_x);
            assert_eq!(b.height, max_y - min_y);
        }
    }

    #[test]
    fn frame_rejects_wrong_count_and_nan() {
        let short = vec![Point2::default(); 55];
        assert_eq!(
            LandmarkFrame::new("s", 0, short, None).unwrap_err(),
            TypeError::LandmarkCount(55)
        );
        let mut pts = vec![Point2::default(); N_LANDMARKS];
        pts[9].y = f64::NAN;
        assert_eq!(
            LandmarkFrame::new("s", 0, pts, None).unwrap_err(),
            TypeError::NonFinite(9)
        );
    }

    #[test]
    fn timestamp_defaults_to_thirty_fps() {
        let f = LandmarkFrame::new("s", 90, vec![Point2::default(); N_LANDMARKS], None).unwrap();
        assert_eq!(f.timestamp_s(), 3.0);
        assert_eq!(f.with_timestamp(1.25).timestamp_s(), 1.25);
    }

    #[test]
    fn empty_bbox_rejected() {
        let f = LandmarkFrame::new("s", 0, vec![Point2::default(); N_LANDMARKS], None).unwrap();
        let err = f
            .with_bbox(BBox { x_min: 0.0, y_min: 0.0, width: 0.0, height: 3.0 })
            .unwrap_err();
        assert!(matches!(err, TypeError::EmptyBox { .. }));
    }

    #[test]
    fn prob_vector_validation_and_argmax_ties() {
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![]).is_err());
        let p = ProbVector::new(vec![0.25, 0.375, 0.375]).unwrap();
        assert_eq!(p.argmax(), 1);
    }
}
