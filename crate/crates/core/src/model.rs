//! Instances, embedded Steiner trees, structural validators and the JSON
//! file formats.
//!
//! Tree vertices are indexed terminals first, then Steiner points. Every file
//! and every solver in the crate uses that convention.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{
    angle_at, convex_hull, dist, point_in_convex_polygon, segments_properly_intersect_eps, Point,
    Tolerance, STEINER_ANGLE,
};

/// A named terminal set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub name: String,
    #[serde(rename = "points")]
    pub terminals: Vec<Point>,
    pub metadata: BTreeMap<String, serde_json::Value>,
}

#[derive(Deserialize)]
struct RawInstance {
    #[serde(default)]
    name: String,
    points: Vec<[f64; 2]>,
    #[serde(default)]
    metadata: BTreeMap<String, serde_json::Value>,
}

impl Instance {
    pub fn new(name: impl Into<String>, terminals: Vec<Point>, tol: &Tolerance) -> Result<Self> {
        check_terminals(&terminals, tol)?;
        Ok(Instance {
            name: name.into(),
            terminals,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.terminals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terminals.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization is infallible")
    }

    pub fn from_json(text: &str, tol: &Tolerance) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text)?;
        let terminals = raw
            .points
            .iter()
            .map(|p| Point::checked(p[0], p[1]))
            .collect::<Result<Vec<_>>>()?;
        let mut inst = Instance::new(raw.name, terminals, tol)?;
        inst.metadata = raw.metadata;
        Ok(inst)
    }
}

fn check_terminals(terminals: &[Point], tol: &Tolerance) -> Result<()> {
    if terminals.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    for (i, p) in terminals.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite { x: p.x, y: p.y });
        }
        for (j, q) in terminals.iter().enumerate().skip(i + 1) {
            if dist(*p, *q) <= tol.eps_len {
                return Err(Error::DuplicateTerminal { first: i, second: j });
            }
        }
    }
    Ok(())
}

/// An embedded tree over terminals and Steiner points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinerTree {
    pub terminals: Vec<Point>,
    pub steiner_points: Vec<Point>,
    pub edges: Vec<[usize; 2]>,
    pub length: f64,
    /// Steiner vertices deliberately emitted with degree other than three
    /// (two Steiner points merged at a topology threshold). Validators skip
    /// their degree/angle checks and record a note instead.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub degenerate_steiner: Vec<usize>,
}

#[derive(Deserialize)]
struct RawTree {
    terminals: Vec<[f64; 2]>,
    #[serde(default)]
    steiner_points: Vec<[f64; 2]>,
    edges: Vec<[usize; 2]>,
    length: f64,
    #[serde(default)]
    degenerate_steiner: Vec<usize>,
}

impl SteinerTree {
    /// Builds a tree and caches its length. Indices are checked; the tree
    /// shape itself is checked by the validators.
    pub fn new(terminals: Vec<Point>, steiner_points: Vec<Point>, edges: Vec<[usize; 2]>) -> Result<Self> {
        let n = terminals.len() + steiner_points.len();
        for (k, e) in edges.iter().enumerate() {
            for &v in e {
                if v >= n {
                    return Err(Error::EdgeIndexOutOfRange { edge: k, index: v, len: n });
                }
            }
            if e[0] == e[1] {
                return Err(Error::MalformedTree(format!("edge {k} is a self-loop at {}", e[0])));
            }
        }
        let mut t = SteinerTree {
            terminals,
            steiner_points,
            edges,
            length: 0.0,
            degenerate_steiner: Vec::new(),
        };
        t.length = t.edge_length_sum();
        Ok(t)
    }

    pub fn n_terminals(&self) -> usize {
        self.terminals.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.terminals.len() + self.steiner_points.len()
    }

    pub fn is_steiner(&self, v: usize) -> bool {
        v >= self.terminals.len()
    }

    pub fn vertex(&self, v: usize) -> Point {
        if v < self.terminals.len() {
            self.terminals[v]
        } else {
            self.steiner_points[v - self.terminals.len()]
        }
    }

    pub fn vertices(&self) -> impl Iterator<Item = Point> + '_ {
        self.terminals.iter().chain(self.steiner_points.iter()).copied()
    }

    pub fn edge_length_sum(&self) -> f64 {
        self.edges
            .iter()
            .map(|e| dist(self.vertex(e[0]), self.vertex(e[1])))
            .sum()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_vertices()];
        for e in &self.edges {
            adj[e[0]].push(e[1]);
            adj[e[1]].push(e[0]);
        }
        adj
    }

    /// Errors unless the edges form a single tree touching every vertex.
    pub fn check_is_tree(&self) -> Result<()> {
        let n = self.n_vertices();
        if n == 1 && self.edges.is_empty() {
            return Ok(());
        }
        if self.edges.len() + 1 != n {
            return Err(Error::MalformedTree(format!(
                "{} edges for {} vertices",
                self.edges.len(),
                n
            )));
        }
        let adj = self.adjacency();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        if count != n {
            return Err(Error::MalformedTree(format!(
                "only {count} of {n} vertices are connected"
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serialization is infallible")
    }

    pub fn from_json(text: &str, tol: &Tolerance) -> Result<Self> {
        let raw: RawTree = serde_json::from_str(text)?;
        let to_points = |v: &[[f64; 2]]| {
            v.iter()
                .map(|p| Point::checked(p[0], p[1]))
                .collect::<Result<Vec<_>>>()
        };
        let terminals = to_points(&raw.terminals)?;
        check_terminals(&terminals, tol)?;
        let steiner_points = to_points(&raw.steiner_points)?;
        let mut t = SteinerTree::new(terminals, steiner_points, raw.edges)?;
        for &v in &raw.degenerate_steiner {
            if v < t.n_terminals() || v >= t.n_vertices() {
                return Err(Error::MalformedTree(format!(
                    "degenerate marker {v} is not a Steiner vertex"
                )));
            }
        }
        t.length = raw.length;
        t.degenerate_steiner = raw.degenerate_steiner;
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub location: String,
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.check, self.location, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

impl ValidationReport {
    fn new() -> Self {
        ValidationReport {
            passed: true,
            violations: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn push(&mut self, check: &str, location: String, value: f64) {
        self.passed = false;
        self.violations.push(Violation {
            check: check.to_string(),
            location,
            value,
        });
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.passed &= other.passed;
        self.violations.extend(other.violations);
        self.notes.extend(other.notes);
    }
}

fn label(t: &SteinerTree, v: usize) -> String {
    if t.is_steiner(v) {
        format!("steiner#{}", v - t.n_terminals())
    } else {
        format!("terminal#{v}")
    }
}

/// Checks non-crossing, degree and 120-degree conditions, the Steiner-point
/// count bound, convex-hull containment and the cached length. All
/// violations are reported.
pub fn validate_smt_structure(t: &SteinerTree, tol: &Tolerance) -> Result<ValidationReport> {
    t.check_is_tree()?;
    let mut report = ValidationReport::new();
    let n = t.n_terminals();
    let adj = t.adjacency();

    for v in 0..n {
        if n >= 2 && adj[v].is_empty() {
            return Err(Error::MalformedTree(format!("terminal {v} is isolated")));
        }
    }

    for (i, e) in t.edges.iter().enumerate() {
        let (a, b) = (t.vertex(e[0]), t.vertex(e[1]));
        if dist(a, b) <= tol.eps_len && !t.degenerate_steiner.iter().any(|d| e.contains(d)) {
            report.push("zero-length-edge", format!("edge#{i}"), dist(a, b));
        }
        for (j, f) in t.edges.iter().enumerate().skip(i + 1) {
            if e.iter().any(|x| f.contains(x)) {
                continue;
            }
            let (c, d) = (t.vertex(f[0]), t.vertex(f[1]));
            if segments_properly_intersect_eps(a, b, c, d, tol.eps_len) {
                report.push("crossing-edges", format!("edge#{i} x edge#{j}"), 1.0);
            }
        }
    }

    for v in 0..t.n_vertices() {
        let deg = adj[v].len();
        let steiner = t.is_steiner(v);
        if steiner && t.degenerate_steiner.contains(&v) {
            report
                .notes
                .push(format!("{} flagged degenerate (degree {deg}); angle checks skipped", label(t, v)));
            continue;
        }
        if steiner && deg != 3 {
            report.push("steiner-degree", label(t, v), deg as f64);
            continue;
        }
        if !steiner && deg > 3 {
            report.push("terminal-degree", label(t, v), deg as f64);
        }
        let here = t.vertex(v);
        for a in 0..deg {
            for b in (a + 1)..deg {
                let ang = match angle_at(here, t.vertex(adj[v][a]), t.vertex(adj[v][b])) {
                    Ok(x) => x,
                    Err(_) => {
                        report.push("degenerate-angle", label(t, v), 0.0);
                        continue;
                    }
                };
                if steiner {
                    if (ang - STEINER_ANGLE).abs() > tol.eps_ang {
                        report.push("steiner-angle", label(t, v), ang);
                    }
                } else if ang < STEINER_ANGLE - tol.eps_ang {
                    report.push("terminal-angle", label(t, v), ang);
                }
            }
        }
    }

    let bound = n.saturating_sub(2);
    if t.steiner_points.len() > bound {
        report.push("steiner-count", "tree".into(), t.steiner_points.len() as f64);
    }

    let hull: Vec<Point> = convex_hull(&t.terminals, tol)
        .into_iter()
        .map(|i| t.terminals[i])
        .collect();
    for (k, s) in t.steiner_points.iter().enumerate() {
        if !point_in_convex_polygon(*s, &hull, tol.eps_len) {
            report.push("outside-hull", format!("steiner#{k}"), 1.0);
        }
    }

    let sum = t.edge_length_sum();
    if (sum - t.length).abs() > 1e-9 * sum.max(1.0) {
        report.push("cached-length", "tree".into(), t.length - sum);
    }
    Ok(report)
}

/// No vertex may lie strictly inside the lune of any edge.
pub fn check_lune_property(t: &SteinerTree, tol: &Tolerance) -> ValidationReport {
    let mut report = ValidationReport::new();
    for (i, e) in t.edges.iter().enumerate() {
        let (u, v) = (t.vertex(e[0]), t.vertex(e[1]));
        let r = dist(u, v);
        for x in 0..t.n_vertices() {
            if x == e[0] || x == e[1] {
                continue;
            }
            let p = t.vertex(x);
            let du = dist(p, u);
            let dv = dist(p, v);
            if du < r - tol.eps_len && dv < r - tol.eps_len {
                report.push("lune", format!("{} in lune of edge#{i}", label(t, x)), r - du.max(dv));
            }
        }
    }
    report
}
