//! Independent reference implementations used by the integration tests and
//! the acceptance suite.
#![allow(dead_code)]

use gazeregion::forest::{Node, Tree};
use gazeregion::Point2;
use rand::Rng;

// ---------------------------------------------------------------------------
// Exhaustive CART

#[derive(Debug, Clone, PartialEq)]
pub enum OracleTree {
    Leaf(Vec<u32>),
    Split { feature: usize, threshold: f64, left: Box<OracleTree>, right: Box<OracleTree> },
}

impl OracleTree {
    pub fn predict(&self, x: &[f64]) -> &[u32] {
        match self {
            OracleTree::Leaf(c) => c,
            OracleTree::Split { feature, threshold, left, right } => {
                if x[*feature] <= *threshold {
                    left.predict(x)
                } else {
                    right.predict(x)
                }
            }
        }
    }

    /// Rebuild a forest tree in the same shape for structural comparison.
    pub fn from_tree(tree: &Tree) -> OracleTree {
        fn go(tree: &Tree, i: usize) -> OracleTree {
            match &tree.nodes()[i] {
                Node::Leaf { offset } => OracleTree::Leaf(tree.leaf_counts(*offset).to_vec()),
                Node::Split { feature, threshold, left, right, .. } => OracleTree::Split {
                    feature: *feature as usize,
                    threshold: *threshold,
                    left: Box::new(go(tree, *left as usize)),
                    right: Box::new(go(tree, *right as usize)),
                },
            }
        }
        go(tree, 0)
    }
}

/// Rational `num / den` weighted Gini impurity of a partition:
/// `n - sum(c^2)/n` per side, summed. Compared by cross-multiplication.
#[derive(Clone, Copy)]
struct Impurity {
    num: i128,
    den: i128,
}

impl Impurity {
    fn of(groups: &[&[u32]]) -> Impurity {
        // sum_g (n_g - sq_g / n_g) over a common denominator.
        let mut num: i128 = 0;
        let mut den: i128 = 1;
        for g in groups {
            let n: i128 = g.iter().map(|&c| c as i128).sum();
            let sq: i128 = g.iter().map(|&c| (c as i128) * (c as i128)).sum();
            // num/den + (n*n - sq)/n
            num = num * n + (n * n - sq) * den;
            den *= n;
        }
        Impurity { num, den }
    }

    fn less(self, o: Impurity) -> bool {
        self.num * o.den < o.num * self.den
    }
}

fn threshold_between(lo: f64, hi: f64) -> f64 {
    let m = lo / 2.0 + hi / 2.0;
    if m >= hi || m < lo {
        lo
    } else {
        m
    }
}

fn counts(idx: &[usize], y: &[usize], k: usize) -> Vec<u32> {
    let mut c = vec![0u32; k];
    for &i in idx {
        c[y[i]] += 1;
    }
    c
}

/// Greedy CART trying every feature and every cut between distinct values.
/// A split must strictly lower the weighted impurity; ties keep the lowest
/// feature, then the lowest threshold.
pub fn cart(x: &[Vec<f64>], y: &[usize], k: usize, max_depth: usize) -> OracleTree {
    let idx: Vec<usize> = (0..x.len()).collect();
    grow(x, y, k, &idx, max_depth)
}

fn grow(x: &[Vec<f64>], y: &[usize], k: usize, idx: &[usize], depth_left: usize) -> OracleTree {
    let here = counts(idx, y, k);
    if depth_left == 0 || here.iter().filter(|&&c| c > 0).count() <= 1 {
        return OracleTree::Leaf(here);
    }
    let parent = Impurity::of(&[&here]);
    let mut best: Option<(usize, f64, Impurity)> = None;
    #[allow(clippy::needless_range_loop)]
    for f in 0..x[0].len() {
        let mut vals: Vec<f64> = idx.iter().map(|&i| x[i][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for w in vals.windows(2) {
            let t = threshold_between(w[0], w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= t);
            let imp = Impurity::of(&[&counts(&l, y, k), &counts(&r, y, k)]);
            if !imp.less(parent) {
                continue;
            }
            if best.as_ref().is_none_or(|b| imp.less(b.2)) {
                best = Some((f, t, imp));
            }
        }
    }
    match best {
        None => OracleTree::Leaf(here),
        Some((f, t, _)) => {
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x[i][f] <= t);
            OracleTree::Split {
                feature: f,
                threshold: t,
                left: Box::new(grow(x, y, k, &l, depth_left - 1)),
                right: Box::new(grow(x, y, k, &r, depth_left - 1)),
            }
        }
    }
}

/// Random CART instance with coarse feature values so ties are common.
pub fn cart_instance(rng: &mut impl Rng) -> (Vec<Vec<f64>>, Vec<usize>, usize) {
    let n = rng.gen_range(2..=200);
    let d = rng.gen_range(1..=5);
    let k = rng.gen_range(2..=4);
    let levels = rng.gen_range(2..=12);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(0..levels) as f64 * 0.5 - 1.0).collect())
        .collect();
    // Labels loosely follow the first feature so trees have structure.
    let y = x
        .iter()
        .map(|r| if rng.gen_bool(0.7) { ((r[0] + 1.0) as usize) % k } else { rng.gen_range(0..k) })
        .collect();
    (x, y, k)
}

// ---------------------------------------------------------------------------
// Delaunay

fn incircle_det(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let det = (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) - (bdx * bdx + bdy * bdy) * (adx * cdy - cdx * ady)
        + (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
    let orient = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    det * orient.signum()
}

/// Indices of points strictly inside the circumcircle of `t`, beyond `tol`.
pub fn circumcircle_violations(points: &[Point2], t: [usize; 3], tol: f64) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !t.contains(&i))
        .filter(|&i| incircle_det(points[t[0]], points[t[1]], points[t[2]], points[i]) > tol)
        .collect()
}

/// Hull vertex count by brute force: `(i, j)` is a hull edge when every
/// other point lies strictly left of it.
pub fn brute_hull_count(points: &[Point2]) -> usize {
    let n = points.len();
    let mut edges = 0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (a, b) = (points[i], points[j]);
            let all_left = (0..n).filter(|&m| m != i && m != j).all(|m| {
                let p = points[m];
                (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) > 0.0
            });
            edges += usize::from(all_left);
        }
    }
    edges
}

/// Uniform points in the unit square with every triple well away from
/// collinear and every quadruple well away from cocircular.
pub fn general_position_points(rng: &mut impl Rng, n: usize) -> Vec<Point2> {
    'retry: loop {
        let pts: Vec<Point2> = (0..n).map(|_| Point2::new(rng.gen(), rng.gen())).collect();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (a, b, c) = (pts[i], pts[j], pts[k]);
                    if ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs() < 1e-6 {
                        continue 'retry;
                    }
                    for &d in &pts[k + 1..] {
                        if incircle_det(a, b, c, d).abs() < 1e-8 {
                            continue 'retry;
                        }
                    }
                }
            }
        }
        return pts;
    }
}

pub fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs()
}

// ---------------------------------------------------------------------------
// Nearest centroid

/// Accuracy of a nearest-centroid classifier fitted and scored on `x`.
pub fn nearest_centroid_accuracy(x: &[Vec<f64>], y: &[usize], k: usize) -> f64 {
    let d = x[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut n = vec![0usize; k];
    for (r, &c) in x.iter().zip(y) {
        n[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(r) {
            *s += v;
        }
    }
    for (s, &m) in sums.iter_mut().zip(&n) {
        s.iter_mut().for_each(|v| *v /= m.max(1) as f64);
    }
    let correct = x
        .iter()
        .zip(y)
        .filter(|(r, &c)| {
            let dist = |m: &Vec<f64>| m.iter().zip(r.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let best = (0..k).filter(|&j| n[j] > 0).min_by(|&a, &b| dist(&sums[a]).total_cmp(&dist(&sums[b]))).unwrap();
            best == c
        })
        .count();
    correct as f64 / x.len() as f64
}
