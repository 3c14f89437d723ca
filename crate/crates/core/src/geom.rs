//! Planar geometry primitives in `f64` with explicit tolerances.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 120 degrees, the angle at which edges meet at a Steiner point.
pub const STEINER_ANGLE: f64 = 2.0 * PI / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    /// Builds a point, rejecting NaN and infinite coordinates.
    pub fn checked(x: f64, y: f64) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Point { x, y })
        } else {
            Err(Error::NonFinite { x, y })
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2-D cross product.
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn midpoint(self, o: Point) -> Point {
        Point::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    /// Counter-clockwise rotation about the origin.
    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Point {
        Point::new(-self.y, self.x)
    }
}

impl From<[f64; 2]> for Point {
    fn from(a: [f64; 2]) -> Self {
        Point::new(a[0], a[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Absolute length slack and angular slack used by every comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub eps_len: f64,
    pub eps_ang: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            eps_len: 1e-9,
            eps_ang: 1e-7,
        }
    }
}

impl Tolerance {
    pub fn new(eps_len: f64, eps_ang: f64) -> Result<Self> {
        if eps_len > 0.0 && eps_ang > 0.0 {
            Ok(Tolerance { eps_len, eps_ang })
        } else {
            Err(Error::InvalidTolerance { eps_len, eps_ang })
        }
    }
}

/// Which side of a directed segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn flip(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

pub fn dist(p: Point, q: Point) -> f64 {
    (p - q).norm()
}

/// Apex of the equilateral triangle on `pq`, on the given side of the directed segment.
pub fn third_equilateral_point(p: Point, q: Point, side: Side) -> Result<Point> {
    if p == q {
        return Err(Error::CoincidentPoints);
    }
    Ok(equilateral_apex(p, q, side))
}

#[inline]
pub(crate) fn equilateral_apex(p: Point, q: Point, side: Side) -> Point {
    const S60: f64 = 0.866_025_403_784_438_6;
    let d = q - p;
    let s = match side {
        Side::Left => S60,
        Side::Right => -S60,
    };
    Point::new(p.x + 0.5 * d.x - s * d.y, p.y + s * d.x + 0.5 * d.y)
}

pub fn circumcircle(a: Point, b: Point, c: Point, tol: &Tolerance) -> Result<(Point, f64)> {
    let ab = b - a;
    let ac = c - a;
    let d = 2.0 * ab.cross(ac);
    let scale = ab.norm().max(ac.norm()).max(dist(b, c));
    // |cross| / longest side is the height of the triangle over that side.
    if scale == 0.0 || (0.5 * d).abs() <= tol.eps_len * scale {
        return Err(Error::Collinear);
    }
    let ab2 = ab.norm_sq();
    let ac2 = ac.norm_sq();
    let ux = (ac.y * ab2 - ab.y * ac2) / d;
    let uy = (ab.x * ac2 - ac.x * ab2) / d;
    let center = Point::new(a.x + ux, a.y + uy);
    Ok((center, Point::new(ux, uy).norm()))
}

/// Points where the line through `p` and `q` meets the circle, ordered by
/// their parameter along `p -> q`. A line within `eps_len` of tangency yields
/// exactly one point.
pub fn line_circle_intersections(
    p: Point,
    q: Point,
    center: Point,
    radius: f64,
    tol: &Tolerance,
) -> Vec<Point> {
    let d = q - p;
    let len = d.norm();
    if len == 0.0 {
        return Vec::new();
    }
    let u = d * (1.0 / len);
    let t0 = (center - p).dot(u);
    let foot = p + u * t0;
    let h = dist(foot, center);
    if (h - radius).abs() <= tol.eps_len {
        return vec![foot];
    }
    if h > radius {
        return Vec::new();
    }
    let half = (radius * radius - h * h).sqrt();
    vec![p + u * (t0 - half), p + u * (t0 + half)]
}

/// Outcome of the Fermat-Torricelli construction for a triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Torricelli {
    /// All angles below 120 degrees: the unique interior point seeing each side at 120 degrees.
    Interior(Point),
    /// The vertex (0, 1 or 2) whose angle is at least 120 degrees minimizes the distance sum.
    Vertex { index: usize, point: Point },
}

impl Torricelli {
    pub fn point(&self) -> Point {
        match *self {
            Torricelli::Interior(p) => p,
            Torricelli::Vertex { point, .. } => point,
        }
    }

    pub fn is_vertex(&self) -> bool {
        matches!(self, Torricelli::Vertex { .. })
    }
}

pub fn torricelli_point(a: Point, b: Point, c: Point, tol: &Tolerance) -> Torricelli {
    let pts = [a, b, c];
    // Coincident vertices: the doubled point dominates the distance sum.
    for i in 0..3 {
        for j in (i + 1)..3 {
            if dist(pts[i], pts[j]) <= tol.eps_len {
                return Torricelli::Vertex {
                    index: i,
                    point: pts[i],
                };
            }
        }
    }
    for i in 0..3 {
        let v = pts[i];
        let p = pts[(i + 1) % 3];
        let q = pts[(i + 2) % 3];
        let ang = (p - v).cross(q - v).abs().atan2((p - v).dot(q - v));
        if ang >= STEINER_ANGLE - tol.eps_ang {
            return Torricelli::Vertex { index: i, point: v };
        }
    }
    // Equilateral apex on ab away from c; the point lies on segment c-E.
    let side = if (b - a).cross(c - a) > 0.0 {
        Side::Right
    } else {
        Side::Left
    };
    let e = equilateral_apex(a, b, side);
    Torricelli::Interior(second_circle_hit(a, b, e, c))
}

/// Second intersection of the line from `e` towards `target` with the
/// circumcircle of the equilateral triangle `p q e` (its centre is the centroid).
#[inline]
pub(crate) fn second_circle_hit(p: Point, q: Point, e: Point, target: Point) -> Point {
    let c = Point::new((p.x + q.x + e.x) / 3.0, (p.y + q.y + e.y) / 3.0);
    let d = target - e;
    let dd = d.norm_sq();
    if dd == 0.0 {
        return e;
    }
    let t = -2.0 * d.dot(e - c) / dd;
    e + d * t
}

/// Strict convex hull as counter-clockwise indices starting at the
/// lexicographically smallest point. Boundary points within `eps_len` of a
/// hull edge are excluded; exact duplicates are reported once.
pub fn convex_hull(points: &[Point], tol: &Tolerance) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&i, &j| {
        points[i]
            .x
            .total_cmp(&points[j].x)
            .then(points[i].y.total_cmp(&points[j].y))
            .then(i.cmp(&j))
    });
    idx.dedup_by(|a, b| dist(points[*a], points[*b]) <= tol.eps_len);
    if idx.len() <= 2 {
        return idx;
    }
    let turns_left = |o: usize, a: usize, b: usize| {
        let (o, a, b) = (points[o], points[a], points[b]);
        let base = dist(o, b);
        (a - o).cross(b - o) > tol.eps_len * base
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * idx.len());
    for &i in &idx {
        while hull.len() >= 2 && !turns_left(hull[hull.len() - 2], hull[hull.len() - 1], i) {
            hull.pop();
        }
        hull.push(i);
    }
    let lower = hull.len() + 1;
    for &i in idx.iter().rev().skip(1) {
        while hull.len() >= lower && !turns_left(hull[hull.len() - 2], hull[hull.len() - 1], i) {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    hull
}

/// Closed-polygon membership with `eps_len` slack; `hull` is CCW.
pub fn point_in_convex_polygon(p: Point, hull: &[Point], eps: f64) -> bool {
    match hull.len() {
        0 => false,
        1 => dist(p, hull[0]) <= eps,
        2 => point_segment_distance(p, hull[0], hull[1]) <= eps,
        m => (0..m).all(|i| {
            let a = hull[i];
            let b = hull[(i + 1) % m];
            let len = dist(a, b);
            (b - a).cross(p - a) >= -eps * len
        }),
    }
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let l2 = ab.norm_sq();
    if l2 == 0.0 {
        return dist(p, a);
    }
    let t = ((p - a).dot(ab) / l2).clamp(0.0, 1.0);
    dist(p, a + ab * t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub edges: Vec<(usize, usize)>,
    pub length: f64,
}

/// O(n^2) Prim on the complete Euclidean graph.
pub fn euclidean_mst(points: &[Point]) -> SpanningTree {
    let n = points.len();
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    let mut length = 0.0;
    if n <= 1 {
        return SpanningTree { edges, length };
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut parent = vec![0usize; n];
    in_tree[0] = true;
    for j in 1..n {
        best[j] = dist(points[0], points[j]);
    }
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if !in_tree[j] && (next == usize::MAX || best[j] < best[next]) {
                next = j;
            }
        }
        in_tree[next] = true;
        length += best[next];
        edges.push((parent[next].min(next), parent[next].max(next)));
        for j in 0..n {
            if !in_tree[j] {
                let d = dist(points[next], points[j]);
                if d < best[j] {
                    best[j] = d;
                    parent[j] = next;
                }
            }
        }
    }
    SpanningTree { edges, length }
}

/// Unsigned angle p-vertex-q in `[0, pi]`.
pub fn angle_at(vertex: Point, p: Point, q: Point) -> Result<f64> {
    let u = p - vertex;
    let v = q - vertex;
    if u.norm_sq() == 0.0 || v.norm_sq() == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    Ok(u.cross(v).abs().atan2(u.dot(v)))
}

/// True iff the open segments `ab` and `cd` share a point.
pub fn segments_properly_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    segments_properly_intersect_eps(a, b, c, d, 0.0)
}

/// Variant treating signed distances within `eps` of a supporting line as zero.
pub fn segments_properly_intersect_eps(a: Point, b: Point, c: Point, d: Point, eps: f64) -> bool {
    let side = |p: Point, q: Point, r: Point| {
        let len = dist(p, q);
        if len == 0.0 {
            return 0.0;
        }
        let s = (q - p).cross(r - p) / len;
        if s.abs() <= eps {
            0.0
        } else {
            s
        }
    };
    let d1 = side(a, b, c);
    let d2 = side(a, b, d);
    let d3 = side(c, d, a);
    let d4 = side(c, d, b);
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return true;
    }
    if d1 == 0.0 && d2 == 0.0 {
        // Collinear: overlap of positive length along the shared line.
        let dir = b - a;
        let l2 = dir.norm_sq();
        if l2 == 0.0 {
            return false;
        }
        let t = |p: Point| (p - a).dot(dir) / l2;
        let (c0, c1) = {
            let (x, y) = (t(c), t(d));
            (x.min(y), x.max(y))
        };
        let lo = c0.max(0.0);
        let hi = c1.min(1.0);
        return (hi - lo) * l2.sqrt() > eps.max(f64::EPSILON);
    }
    false
}
