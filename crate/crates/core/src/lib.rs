//! Eyes-free driver gaze-region classification.
//!
//! Raw 56-point facial landmark frames are normalized against each
//! subject's average face box, turned into feature vectors (landmark
//! positions plus the angles of a fixed Delaunay triangulation over a
//! selected landmark subset), and classified by a random forest whose
//! decisions are pruned by the ratio of the two largest class
//! probabilities.

pub mod bench;
pub mod dataset;
pub mod decide;
pub mod eval;
pub mod features;
pub mod forest;
pub mod geometry;
pub mod model;
pub mod normalize;
pub mod report;
pub mod rng;
pub mod synth;
pub mod types;

pub use dataset::{Dataset, SubjectStream};
pub use decide::{classify, confidence, Decision, Verdict};
pub use features::{FeaturePlan, FeatureVector};
pub use forest::{Forest, ForestParams};
pub use geometry::{delaunay, triangle_angles, Triangulation};
pub use model::GazeModel;
pub use normalize::NormalizationContext;
pub use types::{bbox_from_landmarks, BBox, GazeRegion, LandmarkFrame, Point2, ProbVector, RegionScheme};
