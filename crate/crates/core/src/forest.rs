//! Random forest classifier: bootstrap-bagged, depth-limited CART trees
//! whose leaves store class counts. The class probability of one tree is
//! the fraction of training samples of each class in the reached leaf; the
//! forest averages those fractions over its trees.
//!
//! Split quality is compared in exact integer arithmetic. For a split with
//! left counts `l` and right counts `r`, minimizing weighted Gini impurity is
//! the same as maximizing `sum(l_c^2)/n_l + sum(r_c^2)/n_r`, which is a ratio
//! of integers; two candidates are compared by cross-multiplication in
//! `u128`. Ties are therefore real ties and the lowest-feature,
//! lowest-threshold rule is applied consistently on every platform.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::stream_rng;
use crate::types::ProbVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForestError {
    #[error("training set is empty")]
    Empty,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("sample count {samples} does not match label count {labels}")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("invalid forest parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 1000,
            max_depth: 30,
            features_per_split: None,
            min_samples_split: 2,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn with_trees(mut self, n_trees: usize) -> Self {
        self.n_trees = n_trees;
        self
    }

    pub fn with_depth(mut self, max_depth: usize) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn resolved_mtry(&self, d: usize) -> Result<usize, ForestError> {
        let m = self
            .features_per_split
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .max(1);
        if m > d {
            return Err(ForestError::InvalidParams(format!(
                "features_per_split {m} exceeds feature count {d}"
            )));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
        /// Gini decrease weighted by the node's share of the root samples.
        weighted_decrease: f64,
    },
    Leaf {
        /// Offset of this leaf's counts in [`Tree::counts`].
        offset: u32,
    },
}

/// One decision tree stored as a flat node arena, root at index 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    counts: Vec<u32>,
    n_classes: usize,
}

impl Tree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn leaf_counts(&self, offset: u32) -> &[u32] {
        let o = offset as usize;
        &self.counts[o..o + self.n_classes]
    }

    /// Leaf index reached by `x`.
    fn route(&self, x: &[f64]) -> u32 {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Split { feature, threshold, left, right, .. } => {
                    i = if x[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf { offset } => return *offset,
            }
        }
    }

    pub fn predict_counts(&self, x: &[f64]) -> &[u32] {
        self.leaf_counts(self.route(x))
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + go(nodes, *left as usize).max(go(nodes, *right as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    trees: Vec<Tree>,
    n_classes: usize,
    n_features: usize,
    params: ForestParams,
}

impl Forest {
    /// Grow `params.n_trees` trees. Each tree draws from its own RNG stream
    /// keyed by `(seed, tree_index)`, so the result does not depend on the
    /// size of the worker pool.
    pub fn train<R: AsRef<[f64]> + Sync>(
        x: &[R],
        y: &[usize],
        n_classes: usize,
        params: &ForestParams,
    ) -> Result<Forest, ForestError> {
        if x.is_empty() {
            return Err(ForestError::Empty);
        }
        if x.len() != y.len() {
            return Err(ForestError::LengthMismatch { samples: x.len(), labels: y.len() });
        }
        if params.n_trees == 0 || params.min_samples_split == 0 {
            return Err(ForestError::InvalidParams("n_trees and min_samples_split must be positive".into()));
        }
        if n_classes == 0 {
            return Err(ForestError::InvalidParams("n_classes must be positive".into()));
        }
        let d = x[0].as_ref().len();
        if d == 0 {
            return Err(ForestError::InvalidParams("zero-dimensional features".into()));
        }
        for row in x {
            if row.as_ref().len() != d {
                return Err(ForestError::DimensionMismatch { expected: d, got: row.as_ref().len() });
            }
        }
        if let Some(&label) = y.iter().find(|&&l| l >= n_classes) {
            return Err(ForestError::LabelOutOfRange { label, n_classes });
        }
        let mtry = params.resolved_mtry(d)?;

        let n = x.len();
        let mut columns = vec![0.0; n * d];
        for (i, row) in x.iter().enumerate() {
            for (f, &v) in row.as_ref().iter().enumerate() {
                columns[f * n + i] = v;
            }
        }
        let data = TrainData { columns: &columns, labels: y, n, d, n_classes };

        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| grow_tree(&data, params, mtry, t as u64))
            .collect();
        Ok(Forest { trees, n_classes, n_features: d, params: params.clone() })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    /// Mean over trees of the leaf class fractions.
    pub fn predict_proba(&self, x: &[f64]) -> Result<ProbVector, ForestError> {
        if x.len() != self.n_features {
            return Err(ForestError::DimensionMismatch { expected: self.n_features, got: x.len() });
        }
        let mut acc = vec![0.0; self.n_classes];
        for tree in &self.trees {
            let counts = tree.predict_counts(x);
            let total: u32 = counts.iter().sum();
            let total = f64::from(total);
            for (a, &c) in acc.iter_mut().zip(counts) {
                *a += f64::from(c) / total;
            }
        }
        let k = self.trees.len() as f64;
        for a in &mut acc {
            *a /= k;
        }
        Ok(ProbVector::from_raw(acc))
    }

    /// Mean decrease in impurity per feature, normalized to sum to one.
    /// A forest without any split reports uniform importances.
    pub fn feature_importances(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features];
        for tree in &self.trees {
            for node in &tree.nodes {
                if let Node::Split { feature, weighted_decrease, .. } = node {
                    acc[*feature as usize] += weighted_decrease;
                }
            }
        }
        let k = self.trees.len() as f64;
        for a in &mut acc {
            *a /= k;
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
        } else {
            let u = 1.0 / self.n_features as f64;
            acc.iter_mut().for_each(|a| *a = u);
        }
        acc
    }
}

struct TrainData<'a> {
    columns: &'a [f64],
    labels: &'a [usize],
    n: usize,
    d: usize,
    n_classes: usize,
}

impl TrainData<'_> {
    fn value(&self, feature: usize, sample: u32) -> f64 {
        self.columns[feature * self.n + sample as usize]
    }
}

/// Split score `num / den`, see the module docs.
#[derive(Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn beats(self, other: Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: Score,
}

struct Builder<'a, R: Rng> {
    data: &'a TrainData<'a>,
    params: &'a ForestParams,
    mtry: usize,
    rng: R,
    root_n: f64,
    nodes: Vec<Node>,
    counts: Vec<u32>,
    scratch: Vec<(f64, usize)>,
}

fn grow_tree(data: &TrainData<'_>, params: &ForestParams, mtry: usize, tree_index: u64) -> Tree {
    let mut rng = stream_rng(params.seed, tree_index);
    let mut samples: Vec<u32> = if params.bootstrap {
        (0..data.n).map(|_| rng.gen_range(0..data.n as u32)).collect()
    } else {
        (0..data.n as u32).collect()
    };
    let mut b = Builder {
        data,
        params,
        mtry,
        rng,
        root_n: samples.len() as f64,
        nodes: Vec::new(),
        counts: Vec::new(),
        scratch: Vec::with_capacity(samples.len()),
    };
    b.build(&mut samples, 0);
    Tree { nodes: b.nodes, counts: b.counts, n_classes: data.n_classes }
}

impl<R: Rng> Builder<'_, R> {
    fn build(&mut self, samples: &mut [u32], depth: usize) -> u32 {
        let k = self.data.n_classes;
        let mut class_counts = vec![0u32; k];
        for &s in samples.iter() {
            class_counts[self.data.labels[s as usize]] += 1;
        }
        let id = self.nodes.len() as u32;
        let n = samples.len();
        let pure = class_counts.iter().filter(|&&c| c > 0).count() <= 1;
        let split = if pure || depth >= self.params.max_depth || n < self.params.min_samples_split {
            None
        } else {
            self.find_split(samples, &class_counts)
        };

        let Some(split) = split else {
            let offset = self.counts.len() as u32;
            self.counts.extend_from_slice(&class_counts);
            self.nodes.push(Node::Leaf { offset });
            return id;
        };

        let parent_sq: u128 = class_counts.iter().map(|&c| u128::from(c) * u128::from(c)).sum();
        let score = split.score.num as f64 / split.score.den as f64;
        let weighted_decrease = (score - parent_sq as f64 / n as f64) / self.root_n;
        self.nodes.push(Node::Leaf { offset: 0 });

        let mut left_len = 0;
        for i in 0..n {
            if self.data.value(split.feature, samples[i]) <= split.threshold {
                samples.swap(i, left_len);
                left_len += 1;
            }
        }
        let (left_s, right_s) = samples.split_at_mut(left_len);
        let left = self.build(left_s, depth + 1);
        let right = self.build(right_s, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            left,
            right,
            weighted_decrease,
        };
        id
    }

    fn find_split(&mut self, samples: &[u32], class_counts: &[u32]) -> Option<BestSplit> {
        let data = self.data;
        let n = samples.len() as u128;
        let parent_sq: u128 = class_counts.iter().map(|&c| u128::from(c) * u128::from(c)).sum();
        let mut features = index::sample(&mut self.rng, data.d, self.mtry).into_vec();
        features.sort_unstable();

        let mut best: Option<BestSplit> = None;
        let mut left = vec![0u32; data.n_classes];
        let mut right = vec![0u32; data.n_classes];
        for &f in &features {
            self.scratch.clear();
            self.scratch
                .extend(samples.iter().map(|&s| (data.value(f, s), data.labels[s as usize])));
            self.scratch.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.scratch[0].0 == self.scratch[self.scratch.len() - 1].0 {
                continue;
            }
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(class_counts);
            let mut left_sq: u128 = 0;
            let mut right_sq: u128 = parent_sq;
            for i in 0..self.scratch.len() - 1 {
                let c = self.scratch[i].1;
                left_sq += 2 * u128::from(left[c]) + 1;
                right_sq -= 2 * u128::from(right[c]) - 1;
                left[c] += 1;
                right[c] -= 1;
                let (lo, hi) = (self.scratch[i].0, self.scratch[i + 1].0);
                if lo == hi {
                    continue;
                }
                let n_l = i as u128 + 1;
                let n_r = n - n_l;
                let score = Score { num: left_sq * n_r + right_sq * n_l, den: n_l * n_r };
                // Must strictly reduce impurity: score > parent_sq / n.
                if score.num * n <= parent_sq * score.den {
                    continue;
                }
                if best.as_ref().is_none_or(|b| score.beats(b.score)) {
                    best = Some(BestSplit { feature: f, threshold: midpoint(lo, hi), score });
                }
            }
        }
        best
    }
}

/// Midpoint of two consecutive distinct values, kept strictly below `hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo / 2.0 + hi / 2.0;
    if m >= hi || m < lo {
        lo
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params() -> ForestParams {
        ForestParams::default().with_trees(20).with_seed(3)
    }

    #[test]
    fn single_sample_gives_certain_leaf() {
        let f = Forest::train(&[vec![1.0, 2.0]], &[2], 6, &params()).unwrap();
        for t in f.trees() {
            assert_eq!(t.nodes().len(), 1);
        }
        let p = f.predict_proba(&[0.0, 0.0]).unwrap();
        assert_eq!(p.as_slice(), &[0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn separable_on_one_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..100 {
            let c = i % 2;
            let v0 = if c == 0 { rng.gen_range(0.0..1.0) } else { rng.gen_range(2.0..3.0) };
            x.push(vec![v0]);
            y.push(c);
        }
        let f = Forest::train(&x, &y, 2, &params()).unwrap();
        for t in f.trees() {
            assert!(t.depth() <= 1);
        }
        for (row, &c) in x.iter().zip(&y) {
            assert_eq!(f.predict_proba(row).unwrap().argmax(), c);
        }
    }

    #[test]
    fn xor_is_learned() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..400 {
            let a: f64 = rng.gen_range(-1.0..1.0);
            let b: f64 = rng.gen_range(-1.0..1.0);
            x.push(vec![a, b]);
            y.push(usize::from((a > 0.0) != (b > 0.0)));
        }
        let p = ForestParams::default().with_trees(100).with_depth(8).with_seed(1);
        let f = Forest::train(&x, &y, 2, &p).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(r, &c)| f.predict_proba(r).unwrap().argmax() == c)
            .count();
        assert!(correct as f64 / 400.0 >= 0.95, "accuracy {correct}/400");
    }

    #[test]
    fn leaf_fraction_and_tree_mean() {
        let leaf = Tree { nodes: vec![Node::Leaf { offset: 0 }], counts: vec![3, 1, 0, 0, 0, 0], n_classes: 6 };
        let f = Forest { trees: vec![leaf], n_classes: 6, n_features: 1, params: params() };
        assert_eq!(f.predict_proba(&[0.0]).unwrap().as_slice(), &[0.75, 0.25, 0.0, 0.0, 0.0, 0.0]);

        let a = Tree { nodes: vec![Node::Leaf { offset: 0 }], counts: vec![1, 0], n_classes: 2 };
        let b = Tree { nodes: vec![Node::Leaf { offset: 0 }], counts: vec![0, 4], n_classes: 2 };
        let f = Forest { trees: vec![a, b], n_classes: 2, n_features: 1, params: params() };
        assert_eq!(f.predict_proba(&[0.0]).unwrap().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn importances_uniform_without_splits_and_planted_feature_wins() {
        let f = Forest::train(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]], &[1, 1], 2, &params()).unwrap();
        assert_eq!(f.feature_importances(), vec![1.0 / 3.0; 3]);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..300 {
            let c = i % 3;
            let mut row: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..1.0)).collect();
            row[4] = c as f64 + rng.gen_range(0.0..0.5);
            x.push(row);
            y.push(c);
        }
        let f = Forest::train(&x, &y, 3, &params()).unwrap();
        let imp = f.feature_importances();
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let top = (0..6).max_by(|&a, &b| imp[a].total_cmp(&imp[b])).unwrap();
        assert_eq!(top, 4);
    }

    #[test]
    fn errors() {
        let e: Vec<Vec<f64>> = vec![];
        assert_eq!(Forest::train(&e, &[], 2, &params()), Err(ForestError::Empty));
        assert!(matches!(
            Forest::train(&[vec![1.0], vec![1.0, 2.0]], &[0, 1], 2, &params()),
            Err(ForestError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            Forest::train(&[vec![1.0]], &[5], 2, &params()),
            Err(ForestError::LabelOutOfRange { .. })
        ));
        let f = Forest::train(&[vec![1.0]], &[0], 2, &params()).unwrap();
        assert!(f.predict_proba(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn unlimited_single_tree_fits_distinct_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x: Vec<Vec<f64>> = (0..150).map(|_| (0..3).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
        let y: Vec<usize> = (0..150).map(|_| rng.gen_range(0..4)).collect();
        let p = ForestParams {
            n_trees: 1,
            max_depth: usize::MAX,
            features_per_split: Some(3),
            min_samples_split: 2,
            bootstrap: false,
            seed: 0,
        };
        let f = Forest::train(&x, &y, 4, &p).unwrap();
        for (r, &c) in x.iter().zip(&y) {
            assert_eq!(f.predict_proba(r).unwrap().as_slice()[c], 1.0);
        }
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert_eq!(midpoint(lo, hi), lo);
        assert_eq!(midpoint(1.0, 3.0), 2.0);
    }
}
