//! Feature vectors: the 112 normalized landmark coordinates followed by the
//! three angles of every triangle of a fixed triangulation over a selected
//! landmark subset. The subset is chosen by recursive feature elimination.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{Forest, ForestError, ForestParams};
use crate::geometry::{delaunay, triangle_angles, GeometryError, Triangulation};
use crate::rng::derive_seed;
use crate::types::{Point2, N_LANDMARKS};

/// Default number of landmarks kept for the triangulation.
pub const DEFAULT_SELECTED: usize = 19;
/// Length of the positional block.
pub const POSITION_LEN: usize = 2 * N_LANDMARKS;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("cannot select {0} landmarks; need 3..=56")]
    BadSelectionSize(usize),
    #[error("landmark selection must be {0} distinct sorted indices below 56")]
    BadSelection(usize),
    #[error("feature selection needs labeled frames from at least 2 classes")]
    TooFewClasses,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

pub type Shape = [Point2; N_LANDMARKS];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeaturePlan {
    selected: Vec<usize>,
    triangulation: Triangulation,
}

impl FeaturePlan {
    /// Triangulate the selected points of `reference` once. The same triangles
    /// are reused for every frame, Delaunay or not.
    pub fn build(selected: &[usize], reference: &Shape) -> Result<Self, FeatureError> {
        let k = selected.len();
        if !(3..=N_LANDMARKS).contains(&k) {
            return Err(FeatureError::BadSelectionSize(k));
        }
        if selected.windows(2).any(|w| w[0] >= w[1]) || selected[k - 1] >= N_LANDMARKS {
            return Err(FeatureError::BadSelection(k));
        }
        let pts: Vec<Point2> = selected.iter().map(|&i| reference[i]).collect();
        let triangulation = delaunay(&pts)?;
        Ok(FeaturePlan { selected: selected.to_vec(), triangulation })
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn triangulation(&self) -> &Triangulation {
        &self.triangulation
    }

    pub fn feature_len(&self) -> usize {
        POSITION_LEN + 3 * self.triangulation.len()
    }

    /// Landmark indices (in the 56-point scheme) of each triangle.
    pub fn triangles(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.triangulation
            .triangles
            .iter()
            .map(|t| [self.selected[t[0]], self.selected[t[1]], self.selected[t[2]]])
    }

    pub fn extract(&self, frame: &Shape) -> FeatureVector {
        let mut values = Vec::with_capacity(self.feature_len());
        for p in frame {
            values.push(p.x);
            values.push(p.y);
        }
        self.push_angles(frame, &mut values);
        FeatureVector(values)
    }

    /// Angle block only, three values per plan triangle. Degenerate
    /// triangles get `(pi, 0, 0)`.
    pub fn push_angles(&self, frame: &Shape, out: &mut Vec<f64>) {
        for [a, b, c] in self.triangles() {
            match triangle_angles(frame[a], frame[b], frame[c]) {
                Ok(angles) => out.extend_from_slice(&angles),
                Err(_) => out.extend_from_slice(&[PI, 0.0, 0.0]),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Per-coordinate arithmetic mean of a set of shapes.
pub fn mean_shape<'a>(shapes: impl IntoIterator<Item = &'a Shape>) -> Option<Shape> {
    let mut acc = [Point2::default(); N_LANDMARKS];
    let mut n = 0usize;
    for s in shapes {
        for (a, p) in acc.iter_mut().zip(s) {
            a.x += p.x;
            a.y += p.y;
        }
        n += 1;
    }
    if n == 0 {
        return None;
    }
    for a in &mut acc {
        a.x /= n as f64;
        a.y /= n as f64;
    }
    Some(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfeParams {
    pub keep: usize,
    pub forest: ForestParams,
}

impl Default for RfeParams {
    fn default() -> Self {
        RfeParams { keep: DEFAULT_SELECTED, forest: ForestParams::default().with_trees(100) }
    }
}

/// Outcome of one elimination run.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub selected: Vec<usize>,
    /// Landmarks in the order they were removed.
    pub eliminated: Vec<usize>,
}

/// Recursive feature elimination over landmarks. Each round fits a forest on
/// the positional features of the surviving landmarks and removes the one
/// with the smallest `importance(x) + importance(y)`, the highest index on
/// ties.
pub fn select_landmarks(shapes: &[Shape], labels: &[usize], n_classes: usize, params: &RfeParams) -> Result<Selection, FeatureError> {
    let k = params.keep;
    if !(3..=N_LANDMARKS).contains(&k) {
        return Err(FeatureError::BadSelectionSize(k));
    }
    let mut present = vec![false; n_classes];
    for &l in labels {
        if let Some(p) = present.get_mut(l) {
            *p = true;
        }
    }
    if shapes.is_empty() || present.iter().filter(|&&p| p).count() < 2 {
        return Err(FeatureError::TooFewClasses);
    }

    let mut alive: Vec<usize> = (0..N_LANDMARKS).collect();
    let mut eliminated = Vec::with_capacity(N_LANDMARKS - k);
    let mut round = 0u64;
    while alive.len() > k {
        let rows: Vec<Vec<f64>> = shapes
            .iter()
            .map(|s| alive.iter().flat_map(|&i| [s[i].x, s[i].y]).collect())
            .collect();
        let fp = ForestParams { seed: derive_seed(params.forest.seed, round), ..params.forest.clone() };
        let forest = Forest::train(&rows, labels, n_classes, &fp)?;
        let imp = forest.feature_importances();
        let mut worst = 0;
        let mut worst_score = f64::INFINITY;
        for (pos, pair) in imp.chunks_exact(2).enumerate() {
            let score = pair[0] + pair[1];
            // `<=` so that ties resolve to the highest landmark index.
            if score <= worst_score {
                worst_score = score;
                worst = pos;
            }
        }
        eliminated.push(alive.remove(worst));
        round += 1;
    }
    Ok(Selection { selected: alive, eliminated })
}
