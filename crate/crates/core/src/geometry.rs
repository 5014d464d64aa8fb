//! Delaunay triangulation of small planar point sets and triangle angles.
//!
//! The triangulation is built by a sorted sweep that fans each new point to
//! the visible part of the current hull, followed by Lawson edge flips until
//! every interior edge is locally Delaunay. Groups of triangles joined by
//! cocircular edges form convex cells; each cell is re-triangulated so that
//! the sorted triple list is lexicographically smallest, which makes the
//! output independent of the order the flips happened to run in.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::Point2;

/// Guard on orientation and in-circle determinants.
pub const PREDICATE_EPS: f64 = 1e-12;
/// Minimum separation between input points.
pub const COINCIDENT_EPS: f64 = 1e-9;
/// Minimum triangle area for angle computation.
pub const DEGENERATE_AREA: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("triangulation needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("points {0} and {1} coincide")]
    CoincidentPoints(usize, usize),
    #[error("all points are collinear")]
    Collinear,
    #[error("point {0} has a non-finite coordinate")]
    NonFinite(usize),
    #[error("degenerate triangle ({0}, {1}, {2})")]
    DegenerateTriangle(usize, usize, usize),
}

/// A set of index triples over `point_count` points. Each triple is sorted
/// ascending and the list is sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangulation {
    pub point_count: usize,
    pub triangles: Vec<[usize; 3]>,
}

impl Triangulation {
    pub fn len(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }
}

/// Twice the signed area of `(a, b, c)`; positive when counter-clockwise.
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Positive when `d` lies inside the circumcircle of the counter-clockwise
/// triangle `(a, b, c)`.
pub fn in_circle(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

/// Angles at `a`, `b`, `c` in radians.
pub fn triangle_angles(a: Point2, b: Point2, c: Point2) -> Result<[f64; 3], GeometryError> {
    let cross = orient(a, b, c);
    if cross.abs() / 2.0 <= DEGENERATE_AREA {
        return Err(GeometryError::DegenerateTriangle(0, 1, 2));
    }
    let area2 = cross.abs();
    let angle_at = |p: Point2, q: Point2, r: Point2| {
        let (ux, uy) = (q.x - p.x, q.y - p.y);
        let (vx, vy) = (r.x - p.x, r.y - p.y);
        area2.atan2(ux * vx + uy * vy)
    };
    Ok([angle_at(a, b, c), angle_at(b, c, a), angle_at(c, a, b)])
}

/// Delaunay triangulation with lexicographically smallest tie-breaking.
pub fn delaunay(points: &[Point2]) -> Result<Triangulation, GeometryError> {
    let n = points.len();
    if n < 3 {
        return Err(GeometryError::TooFewPoints(n));
    }
    if let Some(i) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(GeometryError::NonFinite(i));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (p, q) = (points[i], points[j]);
        p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)).then(i.cmp(&j))
    });
    // Any coincident pair within tolerance sits within a short x-window.
    for w in 0..n {
        let p = points[order[w]];
        for &j in &order[w + 1..] {
            let q = points[j];
            if q.x - p.x > COINCIDENT_EPS {
                break;
            }
            if (q.y - p.y).abs() <= COINCIDENT_EPS {
                let (a, b) = (order[w].min(j), order[w].max(j));
                return Err(GeometryError::CoincidentPoints(a, b));
            }
        }
    }

    let mut tris = sweep_triangulate(points, &order)?;
    legalize(points, &mut tris);
    let mut out = canonicalize_cocircular(points, &tris);
    for t in &mut out {
        t.sort_unstable();
    }
    out.sort_unstable();
    Ok(Triangulation {
        point_count: n,
        triangles: out,
    })
}

/// Fan triangulation of the sorted points; triangles are counter-clockwise.
fn sweep_triangulate(points: &[Point2], order: &[usize]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let (p0, p1) = (order[0], order[1]);
    let Some(k) = (2..order.len())
        .find(|&k| orient(points[p0], points[p1], points[order[k]]).abs() > PREDICATE_EPS)
    else {
        return Err(GeometryError::Collinear);
    };

    let apex = order[k];
    let chain = &order[..k];
    let mut tris = Vec::new();
    let side = orient(points[p0], points[p1], points[apex]);
    for w in chain.windows(2) {
        if side > 0.0 {
            tris.push([w[0], w[1], apex]);
        } else {
            tris.push([w[1], w[0], apex]);
        }
    }
    // Hull in counter-clockwise order.
    let mut hull: Vec<usize> = if side > 0.0 {
        let mut h = chain.to_vec();
        h.push(apex);
        h
    } else {
        let mut h = vec![apex];
        h.extend(chain.iter().rev());
        h
    };

    for &q in &order[k + 1..] {
        let pq = points[q];
        let m = hull.len();
        let visible: Vec<bool> = (0..m)
            .map(|e| orient(points[hull[e]], points[hull[(e + 1) % m]], pq) < -PREDICATE_EPS)
            .collect();
        // The visible edges form one contiguous arc; find where it starts.
        let Some(start) = (0..m).find(|&e| visible[e] && !visible[(e + m - 1) % m]) else {
            // Unreachable for sorted insertion; the point is on the hull boundary.
            continue;
        };
        let mut count = 0;
        while visible[(start + count) % m] {
            let a = hull[(start + count) % m];
            let b = hull[(start + count + 1) % m];
            tris.push([b, a, q]);
            count += 1;
        }
        // Drop the interior vertices of the visible arc and insert q.
        let mut new_hull = Vec::with_capacity(m + 1);
        let end = (start + count) % m;
        let mut i = end;
        loop {
            new_hull.push(hull[i]);
            if i == start {
                break;
            }
            i = (i + 1) % m;
        }
        new_hull.push(q);
        hull = new_hull;
    }
    Ok(tris)
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

fn edge_map(tris: &[[usize; 3]]) -> HashMap<(usize, usize), Vec<usize>> {
    let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (t, tri) in tris.iter().enumerate() {
        for e in 0..3 {
            map.entry(edge_key(tri[e], tri[(e + 1) % 3])).or_default().push(t);
        }
    }
    map
}

fn opposite(tri: &[usize; 3], a: usize, b: usize) -> usize {
    *tri.iter().find(|&&v| v != a && v != b).expect("triangle has three vertices")
}

/// Lawson flips until no interior edge violates the in-circle test.
fn legalize(points: &[Point2], tris: &mut [[usize; 3]]) {
    loop {
        let map = edge_map(tris);
        let mut edges: Vec<_> = map.into_iter().filter(|(_, ts)| ts.len() == 2).collect();
        edges.sort_unstable_by_key(|(k, _)| *k);
        let mut touched = vec![false; tris.len()];
        let mut flipped = false;
        for ((a, b), ts) in edges {
            let (t1, t2) = (ts[0], ts[1]);
            if touched[t1] || touched[t2] {
                continue;
            }
            let c = opposite(&tris[t1], a, b);
            let d = opposite(&tris[t2], a, b);
            let [u, v, w] = tris[t1];
            if in_circle(points[u], points[v], points[w], points[d]) > PREDICATE_EPS {
                // Flip edge (a, b) to (c, d); orient both new triangles ccw.
                let mut n1 = [c, d, a];
                let mut n2 = [d, c, b];
                if orient(points[n1[0]], points[n1[1]], points[n1[2]]) < 0.0 {
                    n1.swap(0, 1);
                }
                if orient(points[n2[0]], points[n2[1]], points[n2[2]]) < 0.0 {
                    n2.swap(0, 1);
                }
                tris[t1] = n1;
                tris[t2] = n2;
                touched[t1] = true;
                touched[t2] = true;
                flipped = true;
            }
        }
        if !flipped {
            break;
        }
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Merges triangles across cocircular edges and re-triangulates each merged
/// cell with the lexicographically smallest triple set.
fn canonicalize_cocircular(points: &[Point2], tris: &[[usize; 3]]) -> Vec<[usize; 3]> {
    let mut parent: Vec<usize> = (0..tris.len()).collect();
    for ((a, b), ts) in edge_map(tris) {
        if ts.len() != 2 {
            continue;
        }
        let d = opposite(&tris[ts[1]], a, b);
        let [u, v, w] = tris[ts[0]];
        if in_circle(points[u], points[v], points[w], points[d]).abs() <= PREDICATE_EPS {
            let (r1, r2) = (find(&mut parent, ts[0]), find(&mut parent, ts[1]));
            if r1 != r2 {
                parent[r1.max(r2)] = r1.min(r2);
            }
        }
    }

    let mut cells: HashMap<usize, Vec<usize>> = HashMap::new();
    for t in 0..tris.len() {
        let r = find(&mut parent, t);
        cells.entry(r).or_default().push(t);
    }

    let mut out = Vec::with_capacity(tris.len());
    for members in cells.values() {
        if members.len() == 1 {
            out.push(tris[members[0]]);
            continue;
        }
        let mut verts: Vec<usize> = members.iter().flat_map(|&t| tris[t]).collect();
        verts.sort_unstable();
        verts.dedup();
        out.extend(smallest_convex_triangulation(points, &verts, members.len()));
    }
    out
}

/// Greedy smallest-first triangulation of a convex cell. Any set of
/// non-overlapping triangles on convex-position vertices extends to a full
/// triangulation, so picking the smallest compatible triple each step
/// yields the lexicographic minimum.
fn smallest_convex_triangulation(points: &[Point2], verts: &[usize], count: usize) -> Vec<[usize; 3]> {
    let mut chosen: Vec<[usize; 3]> = Vec::with_capacity(count);
    let m = verts.len();
    'outer: for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                if chosen.len() == count {
                    break 'outer;
                }
                let t = [verts[i], verts[j], verts[k]];
                if orient(points[t[0]], points[t[1]], points[t[2]]).abs() <= PREDICATE_EPS {
                    continue;
                }
                if chosen.iter().all(|c| interiors_disjoint(points, c, &t)) {
                    chosen.push(t);
                }
            }
        }
    }
    chosen
}

/// Separating-axis test on triangle edges.
fn interiors_disjoint(points: &[Point2], t1: &[usize; 3], t2: &[usize; 3]) -> bool {
    let separates = |s: &[usize; 3], o: &[usize; 3]| {
        let sign = orient(points[s[0]], points[s[1]], points[s[2]]).signum();
        (0..3).any(|e| {
            let (a, b) = (points[s[e]], points[s[(e + 1) % 3]]);
            o.iter().all(|&v| sign * orient(a, b, points[v]) <= PREDICATE_EPS)
        })
    };
    separates(t1, t2) || separates(t2, t1)
}

/// Convex hull vertex count, excluding points collinear on hull edges.
pub fn hull_vertex_count(points: &[Point2]) -> usize {
    convex_hull(points).len()
}

/// Convex hull by monotone chain, counter-clockwise, strict corners only.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|p, q| p.x.total_cmp(&q.x).then(p.y.total_cmp(&q.y)));
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point2>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2
                && orient(hull[hull.len() - 2], hull[hull.len() - 1], p) <= PREDICATE_EPS
            {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Shoelace area of a simple polygon given in order.
pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
        .abs()
        / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn pts(v: &[(f64, f64)]) -> Vec<Point2> {
        v.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point2> {
        (0..n)
            .map(|_| Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    }

    /// Brute-force empty-circumcircle check over every other input point.
    fn assert_empty_circles(points: &[Point2], tri: &Triangulation, tol: f64) {
        for t in &tri.triangles {
            let (mut a, b, mut c) = (points[t[0]], points[t[1]], points[t[2]]);
            if orient(a, b, c) < 0.0 {
                std::mem::swap(&mut a, &mut c);
            }
            for (i, &p) in points.iter().enumerate() {
                if t.contains(&i) {
                    continue;
                }
                assert!(in_circle(a, b, c, p) <= tol, "point {i} inside circle of {t:?}");
            }
        }
    }

    #[test]
    fn single_triangle() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]);
        assert_eq!(delaunay(&p).unwrap().triangles, vec![[0, 1, 2]]);
        let cw = pts(&[(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]);
        assert_eq!(delaunay(&cw).unwrap().triangles, vec![[0, 1, 2]]);
    }

    #[test]
    fn unit_square_takes_smallest_diagonal() {
        // Diagonal 0-2 gives [[0,1,2],[0,2,3]]; diagonal 1-3 gives [[0,1,3],[1,2,3]].
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(delaunay(&p).unwrap().triangles, vec![[0, 1, 2], [0, 2, 3]]);
        let q = pts(&[(1.0, 1.0), (0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]);
        assert_eq!(delaunay(&q).unwrap().triangles, vec![[0, 1, 2], [0, 1, 3]]);
    }

    #[test]
    fn regular_hexagon_plus_center_free_cells() {
        // Six cocircular points: a single cell, fanned from the smallest index.
        let p: Vec<Point2> = (0..6)
            .map(|i| {
                let a = i as f64 * PI / 3.0;
                Point2::new(a.cos(), a.sin())
            })
            .collect();
        let t = delaunay(&p).unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.triangles[0], [0, 1, 2]);
        assert_empty_circles(&p, &t, 1e-9);
    }

    #[test]
    fn errors() {
        assert_eq!(delaunay(&pts(&[(0.0, 0.0), (1.0, 1.0)])), Err(GeometryError::TooFewPoints(2)));
        assert_eq!(
            delaunay(&pts(&[(0.0, 0.0), (1.0, 1.0), (2.0, 2.0), (3.0, 3.0)])),
            Err(GeometryError::Collinear)
        );
        assert_eq!(
            delaunay(&pts(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 0.0)])),
            Err(GeometryError::CoincidentPoints(1, 3))
        );
    }

    #[test]
    fn collinear_prefix_then_apex() {
        let p = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (1.5, 2.0)]);
        let t = delaunay(&p).unwrap();
        assert_eq!(t.len(), 3);
        assert_empty_circles(&p, &t, 1e-12);
    }

    #[test]
    fn random_sets_are_delaunay_and_tile_hull() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for n in [3usize, 4, 5, 10, 19, 40, 56] {
            for _ in 0..20 {
                let p = random_points(&mut rng, n);
                let t = delaunay(&p).unwrap();
                assert_empty_circles(&p, &t, 1e-9);
                let h = hull_vertex_count(&p);
                assert_eq!(t.len(), 2 * n - 2 - h);
                let area: f64 = t
                    .triangles
                    .iter()
                    .map(|tr| orient(p[tr[0]], p[tr[1]], p[tr[2]]).abs() / 2.0)
                    .sum();
                let hull_area = polygon_area(&convex_hull(&p));
                assert!((area - hull_area).abs() <= 1e-9 * hull_area);
            }
        }
    }

    #[test]
    fn grid_with_many_cocircular_quads() {
        let mut p = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                p.push(Point2::new(i as f64, j as f64));
            }
        }
        let t = delaunay(&p).unwrap();
        assert_eq!(t.len(), 18);
        assert_empty_circles(&p, &t, 1e-9);
        assert_eq!(delaunay(&p).unwrap(), t);
    }

    #[test]
    fn angle_examples() {
        let eq = triangle_angles(
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.5, 3f64.sqrt() / 2.0),
        )
        .unwrap();
        for a in eq {
            assert!((a - PI / 3.0).abs() < 1e-12);
        }
        let right = triangle_angles(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0))
            .unwrap();
        assert!((right[0] - PI / 2.0).abs() < 1e-12);
        assert!((right[1] - PI / 4.0).abs() < 1e-12);
        assert!((right[2] - PI / 4.0).abs() < 1e-12);
        assert!(triangle_angles(Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(2.0, 2.0)).is_err());
    }
}
