//! Closed-form Steiner trees for two concentric parallel regular polygons.
//!
//! Inner vertices `A_i` and outer vertices `B_i = O + lambda (A_i - O)` share
//! rays from the common centre `O`. Terminal order is `A_0..A_{n-1}` then
//! `B_0..B_{n-1}`, both counter-clockwise.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dist, equilateral_apex, second_circle_hit, Point, Side, Tolerance};
use crate::model::{Instance, SteinerTree};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CprSpec {
    pub n: usize,
    pub lambda: f64,
    pub rotation: f64,
    pub center: Point,
    pub inner_side: f64,
}

impl CprSpec {
    pub fn new(n: usize, lambda: f64) -> Result<Self> {
        let s = CprSpec { n, lambda, rotation: 0.0, center: Point::new(0.0, 0.0), inner_side: 1.0 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidArgument(format!("polygons need n >= 3, got {}", self.n)));
        }
        if !(self.lambda.is_finite() && self.lambda > 1.0) {
            return Err(Error::InvalidArgument(format!("aspect ratio must exceed 1, got {}", self.lambda)));
        }
        if !(self.inner_side.is_finite() && self.inner_side > 0.0) {
            return Err(Error::InvalidArgument(format!("inner side must be positive, got {}", self.inner_side)));
        }
        if !self.rotation.is_finite() || !self.center.is_finite() {
            return Err(Error::NonFinite { x: self.center.x, y: self.center.y });
        }
        Ok(())
    }

    pub fn circumradius(&self) -> f64 {
        self.inner_side / (2.0 * (PI / self.n as f64).sin())
    }

    fn direction(&self, i: usize) -> Point {
        let a = self.rotation + 2.0 * PI * i as f64 / self.n as f64;
        Point::new(a.cos(), a.sin())
    }

    pub fn inner(&self, i: usize) -> Point {
        self.center + self.direction(i % self.n) * self.circumradius()
    }

    pub fn outer(&self, i: usize) -> Point {
        self.center + self.direction(i % self.n) * (self.lambda * self.circumradius())
    }

    /// Recovers the parameters stored by [`generate_cpr_instance`].
    pub fn from_metadata(inst: &Instance) -> Result<Self> {
        let num = |k: &str| {
            inst.metadata
                .get(k)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| Error::InvalidArgument(format!("instance metadata lacks numeric '{k}'")))
        };
        let s = CprSpec {
            n: num("cpr_n")? as usize,
            lambda: num("cpr_lambda")?,
            rotation: num("cpr_rotation")?,
            center: Point::new(num("cpr_center_x")?, num("cpr_center_y")?),
            inner_side: num("cpr_inner_side")?,
        };
        s.validate()?;
        if inst.len() != 2 * s.n {
            return Err(Error::InvalidArgument(format!(
                "metadata describes {} terminals, instance has {}",
                2 * s.n,
                inst.len()
            )));
        }
        Ok(s)
    }
}

pub fn generate_cpr_instance(spec: &CprSpec) -> Result<Instance> {
    spec.validate()?;
    let n = spec.n;
    let pts: Vec<Point> = (0..n).map(|i| spec.inner(i)).chain((0..n).map(|i| spec.outer(i))).collect();
    let inst = Instance::new(format!("cpr-n{}-lambda{}", n, spec.lambda), pts, &Tolerance::default())?;
    Ok(inst
        .with_metadata("family", "cpr")
        .with_metadata("cpr_n", n as u64)
        .with_metadata("cpr_lambda", spec.lambda)
        .with_metadata("cpr_rotation", spec.rotation)
        .with_metadata("cpr_inner_side", spec.inner_side)
        .with_metadata("cpr_center_x", spec.center.x)
        .with_metadata("cpr_center_y", spec.center.y))
}

/// Smallest aspect ratio at which the vertical fork exists.
pub fn lambda_v(n: usize) -> Result<f64> {
    if n < 4 {
        return Err(Error::InvalidArgument(format!("lambda_v needs n >= 4, got {n}")));
    }
    let t = (PI / n as f64).tan();
    Ok((SQRT3 + t) / (SQRT3 - t))
}

/// Aspect ratio above which the singly connected topology is optimal.
pub fn lambda_1(n: usize) -> Result<f64> {
    if n < 13 {
        return Err(Error::InvalidArgument(format!("lambda_1 needs n >= 13, got {n}")));
    }
    Ok(1.0 / (1.0 - 4.0 * (PI / n as f64).sin()))
}

/// Length of the vertical fork on a trapezoid with inner side 1.
pub fn vertical_fork_length(n: usize, lambda: f64) -> f64 {
    (lambda - 1.0) / (2.0 * (PI / n as f64).tan()) + SQRT3 * (lambda + 1.0) / 2.0
}

#[derive(Debug, Clone)]
pub struct VerticalFork {
    /// Terminals `[A, B, P, Q]`; Steiner points `[S1, S2]`, or one merged
    /// point at the threshold.
    pub tree: SteinerTree,
    pub s1: Point,
    pub s2: Point,
    pub m: Point,
    pub n: Point,
    pub predicted_length: f64,
    pub degenerate: bool,
}

/// Fork on the isosceles trapezoid `ABQP` (short side `AB`, long side `PQ`,
/// legs `AP` and `BQ` meeting at angle `2 pi / n`): Steiner points `S1`, `S2`
/// on the symmetry axis `MN`, edges `AS1, BS1, S1S2, S2P, S2Q`.
pub fn build_vertical_fork(a: Point, b: Point, p: Point, q: Point, n: usize, tol: &Tolerance) -> Result<VerticalFork> {
    for x in [a, b, p, q] {
        if !x.is_finite() {
            return Err(Error::NonFinite { x: x.x, y: x.y });
        }
    }
    let ab = dist(a, b);
    let pq = dist(p, q);
    if ab <= tol.eps_len {
        return Err(Error::NotATrapezoid("short side has zero length".into()));
    }
    let scale = pq.max(ab);
    if (b - a).cross(q - p).abs() > tol.eps_len * ab * pq || (b - a).dot(q - p) <= 0.0 {
        return Err(Error::NotATrapezoid("AB and PQ are not parallel in the same direction".into()));
    }
    if (dist(a, p) - dist(b, q)).abs() > tol.eps_len * scale {
        return Err(Error::NotATrapezoid("legs differ in length".into()));
    }
    let lv = lambda_v(n)?;
    let apex = {
        let (u, v) = (p - a, q - b);
        (u.cross(v)).atan2(u.dot(v)).abs()
    };
    if (apex - 2.0 * PI / n as f64).abs() > tol.eps_ang {
        return Err(Error::NotATrapezoid(format!("legs meet at {apex} rad, expected 2pi/{n}")));
    }
    let lambda = pq / ab;
    let m = a.midpoint(b);
    let nn = p.midpoint(q);
    // E and F sit outside the trapezoid, beyond AB and PQ respectively.
    let side_of = |x: Point, y: Point, away: Point| {
        if (y - x).cross(away - x) > 0.0 {
            Side::Right
        } else {
            Side::Left
        }
    };
    let e = equilateral_apex(a, b, side_of(a, b, nn));
    let f = equilateral_apex(p, q, side_of(p, q, m));
    let s1 = second_circle_hit(a, b, e, f);
    let s2 = second_circle_hit(p, q, f, e);
    let mn = dist(m, nn);
    if dist(s1, m) + dist(s2, nn) > mn + tol.eps_len * scale {
        return Err(Error::ForkInfeasible { lambda, lambda_v: lv });
    }
    let predicted_length = ab * vertical_fork_length(n, lambda);
    let degenerate = dist(s1, s2) <= tol.eps_len * scale;
    let tree = if degenerate {
        let s = s1.midpoint(s2);
        let mut t = SteinerTree::new(vec![a, b, p, q], vec![s], vec![[0, 4], [1, 4], [4, 2], [4, 3]])?;
        t.degenerate_steiner = vec![4];
        t
    } else {
        SteinerTree::new(vec![a, b, p, q], vec![s1, s2], vec![[0, 4], [1, 4], [4, 5], [5, 2], [5, 3]])?
    };
    Ok(VerticalFork { tree, s1, s2, m, n: nn, predicted_length, degenerate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TopologyTag {
    Torricelli3gon,
    SqTopologyI,
    SqTopologyIi,
    SinglyConnected,
    UnsupportedRegime,
}

impl TopologyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            TopologyTag::Torricelli3gon => "TORRICELLI_3GON",
            TopologyTag::SqTopologyI => "SQ_TOPOLOGY_I",
            TopologyTag::SqTopologyIi => "SQ_TOPOLOGY_II",
            TopologyTag::SinglyConnected => "SINGLY_CONNECTED",
            TopologyTag::UnsupportedRegime => "UNSUPPORTED_REGIME",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CprSolution {
    /// `None` exactly when the tag is [`TopologyTag::UnsupportedRegime`].
    pub tree: Option<SteinerTree>,
    pub topology_tag: TopologyTag,
    pub predicted_length: f64,
    /// Why no construction applies, for unsupported regimes.
    pub reason: Option<String>,
}

/// Closed-form lengths of the two square topologies with unit inner side.
/// The second is `None` below the fork threshold.
pub fn square_topology_lengths(lambda: f64) -> (f64, Option<f64>) {
    let r2 = 2f64.sqrt();
    let one = 2.0 * r2 * lambda + (1.0 + SQRT3 - 2.0 * r2);
    let lv = lambda_v(4).expect("n = 4 is valid");
    let two = (lambda >= lv).then_some((1.0 + SQRT3) * lambda + SQRT3);
    (one, two)
}

/// Aspect ratio where the two square topologies have equal length.
pub fn square_crossover() -> f64 {
    let r2 = 2f64.sqrt();
    (2.0 * r2 - 1.0) / (2.0 * r2 - 1.0 - SQRT3)
}

pub fn solve_cpr(spec: &CprSpec, tol: &Tolerance) -> Result<CprSolution> {
    spec.validate()?;
    let n = spec.n;
    let s = spec.inner_side;
    let a: Vec<Point> = (0..n).map(|i| spec.inner(i)).collect();
    let b: Vec<Point> = (0..n).map(|i| spec.outer(i)).collect();
    let terminals: Vec<Point> = a.iter().chain(b.iter()).copied().collect();
    let (ai, bi) = (|i: usize| i % n, |i: usize| n + i % n);

    if n == 3 {
        let mut edges: Vec<[usize; 2]> = (0..3).map(|i| [6, ai(i)]).collect();
        edges.extend((0..3).map(|i| [ai(i), bi(i)]));
        let tree = SteinerTree::new(terminals, vec![spec.center], edges)?;
        return Ok(CprSolution {
            tree: Some(tree),
            topology_tag: TopologyTag::Torricelli3gon,
            predicted_length: SQRT3 * spec.lambda * s,
            reason: None,
        });
    }

    if n == 4 {
        let (one, two) = square_topology_lengths(spec.lambda);
        if let Some(two) = two.filter(|&t| t < one) {
            // Forks on A0 A3 B3 B0 and A1 A2 B2 B1, joined by A0 A1.
            let mut steiner = Vec::new();
            let mut edges = vec![[ai(0), ai(1)]];
            let mut degenerate = Vec::new();
            for (x, y) in [(3, 0), (1, 2)] {
                let fork = build_vertical_fork(a[x], a[y], b[x], b[y], 4, tol)?;
                append_fork(&fork.tree, [ai(x), ai(y), bi(x), bi(y)], 2 * n, &mut steiner, &mut edges, &mut degenerate);
            }
            let mut tree = SteinerTree::new(terminals, steiner, edges)?;
            tree.degenerate_steiner = degenerate;
            return Ok(CprSolution {
                tree: Some(tree),
                topology_tag: TopologyTag::SqTopologyIi,
                predicted_length: two * s,
                reason: None,
            });
        }
        // Inner-square tree pairing A0,A1 and A2,A3, plus radial edges.
        let h = s / (2.0 * SQRT3);
        let fork_point = |x: usize, y: usize| {
            let m = a[x].midpoint(a[y]);
            let inward = spec.center - m;
            m + inward * (h / inward.norm())
        };
        let steiner = vec![fork_point(0, 1), fork_point(2, 3)];
        let mut edges = vec![[ai(0), 8], [ai(1), 8], [8, 9], [ai(2), 9], [ai(3), 9]];
        edges.extend((0..4).map(|i| [ai(i), bi(i)]));
        let tree = SteinerTree::new(terminals, steiner, edges)?;
        return Ok(CprSolution {
            tree: Some(tree),
            topology_tag: TopologyTag::SqTopologyI,
            predicted_length: one * s,
            reason: None,
        });
    }

    if n >= 13 {
        let l1 = lambda_1(n)?;
        if spec.lambda >= l1 {
            let fork = build_vertical_fork(a[0], a[1], b[0], b[1], n, tol)?;
            let mut steiner = Vec::new();
            let mut edges = Vec::new();
            let mut degenerate = Vec::new();
            append_fork(&fork.tree, [ai(0), ai(1), bi(0), bi(1)], 2 * n, &mut steiner, &mut edges, &mut degenerate);
            // Polygon edges i -> i+1, skipping the fork side and the side opposite it.
            let skip = n / 2;
            for i in (1..n).filter(|&i| i != skip) {
                edges.push([ai(i), ai(i + 1)]);
                edges.push([bi(i), bi(i + 1)]);
            }
            let mut tree = SteinerTree::new(terminals, steiner, edges)?;
            tree.degenerate_steiner = degenerate;
            let t = (PI / n as f64).tan();
            let l = spec.lambda;
            return Ok(CprSolution {
                tree: Some(tree),
                topology_tag: TopologyTag::SinglyConnected,
                predicted_length: s * ((l - 1.0) / (2.0 * t) + (n as f64 - 2.0 + SQRT3 / 2.0) * (l + 1.0)),
                reason: None,
            });
        }
        return Ok(unsupported(format!(
            "n = {n} needs lambda >= lambda_1 = {l1}, got {}",
            spec.lambda
        )));
    }
    Ok(unsupported(format!("no closed form is established for n = {n} (only 3, 4 and n >= 13)")))
}

fn unsupported(reason: String) -> CprSolution {
    CprSolution {
        tree: None,
        topology_tag: TopologyTag::UnsupportedRegime,
        predicted_length: f64::NAN,
        reason: Some(reason),
    }
}

/// Copies a fork's Steiner points and edges into a larger tree, mapping its
/// four terminals to `ids` and its Steiner points after `n_terminals`.
fn append_fork(
    fork: &SteinerTree,
    ids: [usize; 4],
    n_terminals: usize,
    steiner: &mut Vec<Point>,
    edges: &mut Vec<[usize; 2]>,
    degenerate: &mut Vec<usize>,
) {
    let base = n_terminals + steiner.len();
    let map = |v: usize| if v < 4 { ids[v] } else { base + v - 4 };
    steiner.extend_from_slice(&fork.steiner_points);
    edges.extend(fork.edges.iter().map(|e| [map(e[0]), map(e[1])]));
    degenerate.extend(fork.degenerate_steiner.iter().map(|&v| map(v)));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::convex_hull;
    use crate::model::validate_smt_structure;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn thresholds() {
        assert_abs_diff_eq!(lambda_v(4).unwrap(), 2.0 + SQRT3, epsilon = 1e-12);
        assert_abs_diff_eq!(lambda_v(6).unwrap(), 2.0, epsilon = 1e-12);
        assert!(lambda_v(3).is_err());
        assert!(lambda_1(12).is_err());
        for (n, want) in [(13, 23.3987), (20, 2.6719), (40, 1.4574), (100, 1.1437), (500, 1.0258)] {
            assert_abs_diff_eq!(lambda_1(n).unwrap(), want, epsilon = 5e-5);
        }
        for n in 13..=1000 {
            assert!(lambda_1(n).unwrap() >= lambda_v(n).unwrap());
            assert!(lambda_1(n + 1).unwrap() < lambda_1(n).unwrap());
        }
        assert_abs_diff_eq!(square_crossover(), 18.972, epsilon = 5e-4);
    }

    #[test]
    fn instance_layout() {
        let spec = CprSpec { rotation: PI / 4.0, inner_side: 2f64.sqrt(), lambda: 2.0, ..CprSpec::new(4, 2.0).unwrap() };
        let inst = generate_cpr_instance(&spec).unwrap();
        // Rotated by pi/4 the square is axis-aligned with corners (+-1/sqrt2, +-1/sqrt2).
        assert_abs_diff_eq!(inst.terminals[0].x, inst.terminals[0].y, epsilon = 1e-12);
        assert_abs_diff_eq!(inst.terminals[0].x, 0.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(inst.terminals[2].x, -(0.5f64.sqrt()), epsilon = 1e-12);
        for i in 0..4 {
            assert_abs_diff_eq!(inst.terminals[4 + i].x, 2.0 * inst.terminals[i].x, epsilon = 1e-12);
        }
        let mut hull = convex_hull(&inst.terminals, &tol());
        hull.sort_unstable();
        assert_eq!(hull, vec![4, 5, 6, 7]);
        assert_eq!(CprSpec::from_metadata(&inst).unwrap(), spec);
    }

    #[test]
    fn triangle_star() {
        let sol = solve_cpr(&CprSpec::new(3, 2.0).unwrap(), &tol()).unwrap();
        let t = sol.tree.unwrap();
        assert_eq!(sol.topology_tag, TopologyTag::Torricelli3gon);
        assert_relative_eq!(t.length, 2.0 * SQRT3, max_relative = 1e-12);
        assert!(validate_smt_structure(&t, &tol()).unwrap().passed);
    }

    #[test]
    fn square_regimes() {
        let t10 = solve_cpr(&CprSpec::new(4, 10.0).unwrap(), &tol()).unwrap();
        assert_eq!(t10.topology_tag, TopologyTag::SqTopologyI);
        // 20 sqrt2 + (1 + sqrt3 - 2 sqrt2) = 28.2843 - 0.0964
        assert_abs_diff_eq!(t10.tree.as_ref().unwrap().length, 28.1879, epsilon = 1e-4);
        let t25 = solve_cpr(&CprSpec::new(4, 25.0).unwrap(), &tol()).unwrap();
        assert_eq!(t25.topology_tag, TopologyTag::SqTopologyIi);
        assert_abs_diff_eq!(t25.tree.as_ref().unwrap().length, 70.0333, epsilon = 1e-4);
        for sol in [t10, t25] {
            let t = sol.tree.unwrap();
            assert_relative_eq!(t.length, sol.predicted_length, max_relative = 1e-9);
            assert!(validate_smt_structure(&t, &tol()).unwrap().passed);
        }
    }

    #[test]
    fn fork_geometry() {
        for (n, l) in [(4usize, 4.0), (8, 3.0), (13, 30.0)] {
            let spec = CprSpec::new(n, l).unwrap();
            let f = build_vertical_fork(spec.inner(0), spec.inner(1), spec.outer(0), spec.outer(1), n, &tol()).unwrap();
            assert_relative_eq!(f.tree.length, f.predicted_length, max_relative = 1e-12);
            assert_abs_diff_eq!(dist(f.s1, f.m), 1.0 / (2.0 * SQRT3), epsilon = 1e-12);
            assert_abs_diff_eq!(dist(f.s2, f.n), l / (2.0 * SQRT3), epsilon = 1e-12);
            assert!(validate_smt_structure(&f.tree, &tol()).unwrap().passed);
        }
        let f8 = build_vertical_fork(
            CprSpec::new(8, 3.0).unwrap().inner(0),
            CprSpec::new(8, 3.0).unwrap().inner(1),
            CprSpec::new(8, 3.0).unwrap().outer(0),
            CprSpec::new(8, 3.0).unwrap().outer(1),
            8,
            &tol(),
        )
        .unwrap();
        assert_abs_diff_eq!(f8.tree.length, 1.0 / (PI / 8.0).tan() + 2.0 * SQRT3, epsilon = 1e-12);
    }

    #[test]
    fn fork_threshold_and_failure() {
        let lv = lambda_v(4).unwrap();
        let spec = CprSpec::new(4, lv).unwrap();
        let f = build_vertical_fork(spec.inner(0), spec.inner(1), spec.outer(0), spec.outer(1), 4, &tol()).unwrap();
        assert!(f.degenerate);
        assert_abs_diff_eq!(f.tree.length, 2.0 + 2.0 * SQRT3, epsilon = 1e-9);
        let r = validate_smt_structure(&f.tree, &tol()).unwrap();
        assert!(r.passed && !r.notes.is_empty());

        let low = CprSpec::new(4, 1.5).unwrap();
        assert!(matches!(
            build_vertical_fork(low.inner(0), low.inner(1), low.outer(0), low.outer(1), 4, &tol()),
            Err(Error::ForkInfeasible { .. })
        ));
        let skew = build_vertical_fork(low.inner(0), low.inner(1), low.outer(0), low.outer(1) + Point::new(0.1, 0.0), 4, &tol());
        assert!(matches!(skew, Err(Error::NotATrapezoid(_))));
    }

    #[test]
    fn singly_connected_regime() {
        for (n, l) in [(13usize, 30.0), (20, 5.0), (40, 2.0), (100, 2.0)] {
            let spec = CprSpec::new(n, l).unwrap();
            let sol = solve_cpr(&spec, &tol()).unwrap();
            assert_eq!(sol.topology_tag, TopologyTag::SinglyConnected);
            let t = sol.tree.unwrap();
            assert_relative_eq!(t.length, sol.predicted_length, max_relative = 1e-9);
            let r = validate_smt_structure(&t, &tol()).unwrap();
            assert!(r.passed, "n={n}: {:?}", r.violations);
        }
        let low = solve_cpr(&CprSpec::new(13, 5.0).unwrap(), &tol()).unwrap();
        assert_eq!(low.topology_tag, TopologyTag::UnsupportedRegime);
        assert!(low.tree.is_none() && low.reason.is_some());
        let mid = solve_cpr(&CprSpec::new(8, 50.0).unwrap(), &tol()).unwrap();
        assert_eq!(mid.topology_tag, TopologyTag::UnsupportedRegime);
    }
}
