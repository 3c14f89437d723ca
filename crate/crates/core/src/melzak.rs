//! Full Steiner topologies and their Melzak realizations.
//!
//! A full topology over `n` terminals has terminals `0..n` as leaves and
//! Steiner nodes `n..2n-2`, each of degree three. Realization contracts
//! cherries into equilateral E-points, then walks the merge stack backwards
//! placing each Steiner point on the circle through its triangle.

use crate::error::{Error, Result};
use crate::geom::{dist, equilateral_apex, Point, Side, Tolerance};
use crate::model::{validate_smt_structure, SteinerTree};
use crate::par;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FullTopology {
    pub n_terminals: usize,
    pub edges: Vec<[usize; 2]>,
}

impl FullTopology {
    /// Checks the full-topology invariants: a tree, terminals are leaves,
    /// Steiner nodes have degree three.
    pub fn from_edges(n_terminals: usize, edges: Vec<[usize; 2]>) -> Result<Self> {
        let t = FullTopology { n_terminals, edges };
        t.check()?;
        Ok(t)
    }

    pub fn n_steiner(&self) -> usize {
        self.n_terminals.saturating_sub(2)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_terminals + self.n_steiner()
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes()];
        for e in &self.edges {
            adj[e[0]].push(e[1]);
            adj[e[1]].push(e[0]);
        }
        adj
    }

    fn check(&self) -> Result<()> {
        let n = self.n_terminals;
        if n < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: n });
        }
        let nodes = self.n_nodes();
        if self.edges.len() + 1 != nodes {
            return Err(Error::MalformedTree(format!("{} edges for {nodes} nodes", self.edges.len())));
        }
        for (k, e) in self.edges.iter().enumerate() {
            for &v in e {
                if v >= nodes {
                    return Err(Error::EdgeIndexOutOfRange { edge: k, index: v, len: nodes });
                }
            }
        }
        let adj = self.adjacency();
        for (v, nb) in adj.iter().enumerate() {
            let want = if v < n { 1 } else { 3 };
            if nb.len() != want {
                return Err(Error::MalformedTree(format!("node {v} has degree {}", nb.len())));
            }
        }
        let mut seen = vec![false; nodes];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::MalformedTree("disconnected topology".into()));
        }
        Ok(())
    }

    /// Label-independent identity of the topology: for every edge, the set of
    /// terminals on the side away from terminal 0, as a sorted list of
    /// bitmasks. Two full topologies are equal exactly when these agree,
    /// whatever numbering their Steiner nodes carry.
    pub fn canonical_form(&self) -> Vec<u64> {
        let adj = self.adjacency();
        let nodes = self.n_nodes();
        // Root at terminal 0; below[v] = terminals in the subtree of v.
        let mut parent = vec![usize::MAX; nodes];
        let mut order = Vec::with_capacity(nodes);
        let mut stack = vec![0];
        parent[0] = 0;
        while let Some(v) = stack.pop() {
            order.push(v);
            for &w in &adj[v] {
                if parent[w] == usize::MAX {
                    parent[w] = v;
                    stack.push(w);
                }
            }
        }
        let mut below = vec![0u64; nodes];
        for &v in order.iter().rev() {
            if v < self.n_terminals {
                below[v] |= 1 << v;
            }
            if v != 0 {
                below[parent[v]] |= below[v];
            }
        }
        let mut splits: Vec<u64> = order.iter().filter(|&&v| v != 0).map(|&v| below[v]).collect();
        splits.sort_unstable();
        splits
    }
}

/// `(2n-5)!!` for `n >= 3`, one for `n = 2`.
pub fn topology_count(n: usize) -> u64 {
    (3..n).map(|k| (2 * k - 3) as u64).product()
}

/// Decodes a mixed-radix index into the topology obtained by inserting
/// terminal `k` into edge `c_k` of the previous tree.
pub fn topology_from_index(n: usize, mut idx: u64) -> FullTopology {
    assert!(n >= 2, "a topology needs two terminals");
    if n == 2 {
        return FullTopology { n_terminals: 2, edges: vec![[0, 1]] };
    }
    let mut edges = Vec::with_capacity(2 * n - 3);
    edges.extend_from_slice(&[[0, n], [1, n], [2, n]]);
    for k in 3..n {
        let radix = (2 * k - 3) as u64;
        let c = (idx % radix) as usize;
        idx /= radix;
        let s = n + k - 2;
        let [a, b] = edges[c];
        edges[c] = [a, s];
        edges.push([s, b]);
        edges.push([k, s]);
    }
    FullTopology { n_terminals: n, edges }
}

/// Every full topology on `n >= 2` terminals, each exactly once.
pub fn enumerate_full_topologies(n: usize) -> impl Iterator<Item = FullTopology> {
    (0..topology_count(n)).map(move |i| topology_from_index(n, i))
}

#[derive(Debug, Clone)]
pub struct FstResult {
    /// `None` when no branch gives a valid realization.
    pub tree: Option<SteinerTree>,
    pub length: f64,
    pub topology: FullTopology,
}

impl FstResult {
    pub fn is_feasible(&self) -> bool {
        self.tree.is_some()
    }

    fn infeasible(topology: FullTopology) -> Self {
        FstResult { tree: None, length: f64::INFINITY, topology }
    }
}

struct MergePlan {
    /// `(steiner, child_a, child_b)` in contraction order.
    merges: Vec<(usize, usize, usize)>,
    last: (usize, usize),
    children: Vec<(usize, usize)>,
}

fn merge_plan(topo: &FullTopology) -> MergePlan {
    let n = topo.n_terminals;
    let nodes = topo.n_nodes();
    let adj = topo.adjacency();
    let mut leaf = vec![false; nodes];
    let mut alive = vec![true; nodes];
    leaf[..n].iter_mut().for_each(|l| *l = true);
    let mut merges = Vec::with_capacity(n.saturating_sub(2));
    let mut children = vec![(usize::MAX, usize::MAX); nodes];
    let mut remaining = nodes;
    while remaining > 2 {
        let (s, a, b) = (n..nodes)
            .filter(|&s| alive[s] && !leaf[s])
            .find_map(|s| {
                let mut it = adj[s].iter().copied().filter(|&w| alive[w] && leaf[w]);
                match (it.next(), it.next()) {
                    (Some(a), Some(b)) => Some((s, a, b)),
                    _ => None,
                }
            })
            .expect("a full topology always has a cherry");
        alive[a] = false;
        alive[b] = false;
        leaf[s] = true;
        children[s] = (a, b);
        merges.push((s, a, b));
        remaining -= 2;
    }
    let mut rest = (0..nodes).filter(|&v| alive[v]);
    let last = (rest.next().unwrap(), rest.next().unwrap());
    MergePlan { merges, last, children }
}

struct Realizer<'a> {
    points: &'a [Point],
    topo: &'a FullTopology,
    plan: MergePlan,
    tol: &'a Tolerance,
    pos: Vec<Point>,
    act: Vec<Point>,
    best: Option<SteinerTree>,
    best_len: f64,
}

impl<'a> Realizer<'a> {
    fn new(points: &'a [Point], topo: &'a FullTopology, tol: &'a Tolerance) -> Self {
        let nodes = topo.n_nodes();
        let mut pos = vec![Point::new(0.0, 0.0); nodes];
        pos[..points.len()].copy_from_slice(points);
        Realizer {
            points,
            topo,
            plan: merge_plan(topo),
            tol,
            act: pos.clone(),
            pos,
            best: None,
            best_len: f64::INFINITY,
        }
    }

    fn branch(&mut self, depth: usize) {
        if depth == self.plan.merges.len() {
            self.reconstruct();
            return;
        }
        let (s, a, b) = self.plan.merges[depth];
        for side in [Side::Left, Side::Right] {
            self.pos[s] = equilateral_apex(self.pos[a], self.pos[b], side);
            self.branch(depth + 1);
        }
    }

    /// Places Steiner node `s` on the segment from its E-point toward
    /// `target`, on the arc of the triangle circle opposite the E-point.
    /// Returns the point and its parameter along that segment.
    fn place(&self, s: usize, target: Point) -> Option<(Point, f64)> {
        let e = self.pos[s];
        let (a, b) = self.plan.children[s];
        let (pa, pb) = (self.pos[a], self.pos[b]);
        let d = target - e;
        let dd = d.norm_sq();
        if dd <= self.tol.eps_len * self.tol.eps_len {
            return None;
        }
        let c = (pa + pb + e) * (1.0 / 3.0);
        let t = -2.0 * d.dot(e - c) / dd;
        let len = dd.sqrt();
        if t * len <= self.tol.eps_len || (1.0 - t) * len <= self.tol.eps_len {
            return None;
        }
        let x = e + d * t;
        let chord = pb - pa;
        let side_e = chord.cross(e - pa).signum();
        if chord.cross(x - pa) * side_e > self.tol.eps_len * chord.norm() {
            return None;
        }
        Some((x, t))
    }

    fn reconstruct(&mut self) {
        let n = self.topo.n_terminals;
        let (u, v) = self.plan.last;
        match (u >= n, v >= n) {
            (false, false) => {}
            (true, false) | (false, true) => {
                let (s, other) = if u >= n { (u, v) } else { (v, u) };
                match self.place(s, self.pos[other]) {
                    Some((x, _)) => self.act[s] = x,
                    None => return,
                }
            }
            (true, true) => {
                let (xu, tu) = match self.place(u, self.pos[v]) {
                    Some(r) => r,
                    None => return,
                };
                let (xv, tv) = match self.place(v, self.pos[u]) {
                    Some(r) => r,
                    None => return,
                };
                if tu + tv >= 1.0 || dist(xu, xv) <= self.tol.eps_len {
                    return;
                }
                self.act[u] = xu;
                self.act[v] = xv;
            }
        }
        for k in (0..self.plan.merges.len()).rev() {
            let (s, a, b) = self.plan.merges[k];
            let here = self.act[s];
            for child in [a, b] {
                if child >= n {
                    match self.place(child, here) {
                        Some((x, _)) => self.act[child] = x,
                        None => return,
                    }
                }
            }
        }
        let mut length = 0.0;
        for e in &self.topo.edges {
            let l = dist(self.act[e[0]], self.act[e[1]]);
            if l <= self.tol.eps_len {
                return;
            }
            length += l;
        }
        if length >= self.best_len {
            return;
        }
        let tree = SteinerTree::new(
            self.points.to_vec(),
            self.act[n..].to_vec(),
            self.topo.edges.clone(),
        )
        .expect("topology indices are in range");
        match validate_smt_structure(&tree, self.tol) {
            Ok(r) if r.passed => {
                self.best_len = length;
                self.best = Some(tree);
            }
            _ => {}
        }
    }
}

fn check_points(points: &[Point], tol: &Tolerance) -> Result<()> {
    for (i, p) in points.iter().enumerate() {
        if !p.is_finite() {
            return Err(Error::NonFinite { x: p.x, y: p.y });
        }
        if points[..i].iter().any(|q| dist(*p, *q) <= tol.eps_len) {
            return Err(Error::CoincidentPoints);
        }
    }
    Ok(())
}

/// Shortest valid embedding of `topo` with the given terminal positions,
/// trying both E-point orientations at every contraction.
pub fn realize_fst(points: &[Point], topo: &FullTopology, tol: &Tolerance) -> Result<FstResult> {
    if points.len() != topo.n_terminals {
        return Err(Error::InvalidArgument(format!(
            "{} points for a topology on {} terminals",
            points.len(),
            topo.n_terminals
        )));
    }
    check_points(points, tol)?;
    Ok(realize_unchecked(points, topo, tol))
}

fn realize_unchecked(points: &[Point], topo: &FullTopology, tol: &Tolerance) -> FstResult {
    if topo.n_terminals == 2 {
        let tree = SteinerTree::new(points.to_vec(), vec![], vec![[0, 1]]).expect("two-vertex edge");
        return FstResult { length: tree.length, tree: Some(tree), topology: topo.clone() };
    }
    let mut r = Realizer::new(points, topo, tol);
    r.branch(0);
    match r.best {
        Some(tree) => FstResult { length: tree.length, tree: Some(tree), topology: topo.clone() },
        None => FstResult::infeasible(topo.clone()),
    }
}

/// Minimum full Steiner tree over every full topology of `points`.
/// Ties keep the topology with the smallest enumeration index.
pub fn minimum_fst(points: &[Point], tol: &Tolerance) -> Result<FstResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    check_points(points, tol)?;
    let total = topology_count(n);
    let chunks = total.min(64) as usize;
    let per = total.div_ceil(chunks as u64);
    let best = par::map_range(chunks, |c| {
        let lo = c as u64 * per;
        let hi = (lo + per).min(total);
        let mut best: Option<(f64, u64, FstResult)> = None;
        for idx in lo..hi {
            let topo = topology_from_index(n, idx);
            let res = realize_unchecked(points, &topo, tol);
            if res.is_feasible() && best.as_ref().is_none_or(|b| res.length < b.0) {
                best = Some((res.length, idx, res));
            }
        }
        best
    });
    let winner = best
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    Ok(match winner {
        Some((_, _, res)) => res,
        None => FstResult::infeasible(topology_from_index(n, 0)),
    })
}

/// Full Steiner tree of an explicit topology, with no other fallback.
pub fn realize_topology_edges(points: &[Point], edges: Vec<[usize; 2]>, tol: &Tolerance) -> Result<FstResult> {
    let topo = FullTopology::from_edges(points.len(), edges)?;
    realize_fst(points, &topo, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::collections::HashSet;

    const SQ3: f64 = 1.732_050_807_568_877_2;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn double_factorial(mut k: i64) -> u64 {
        let mut r = 1u64;
        while k > 1 {
            r *= k as u64;
            k -= 2;
        }
        r
    }

    #[test]
    fn counts_and_uniqueness() {
        assert_eq!(enumerate_full_topologies(2).count(), 1);
        for n in 3..=7 {
            let mut seen = HashSet::new();
            for t in enumerate_full_topologies(n) {
                t.check().unwrap();
                assert!(seen.insert(t.canonical_form()), "duplicate topology for n={n}");
            }
            assert_eq!(seen.len() as u64, double_factorial(2 * n as i64 - 5));
        }
    }

    #[test]
    fn canonical_form_ignores_steiner_labels() {
        let a = FullTopology::from_edges(4, vec![[0, 4], [1, 4], [4, 5], [2, 5], [3, 5]]).unwrap();
        let b = FullTopology::from_edges(4, vec![[0, 5], [1, 5], [4, 5], [2, 4], [3, 4]]).unwrap();
        let c = FullTopology::from_edges(4, vec![[0, 4], [2, 4], [4, 5], [1, 5], [3, 5]]).unwrap();
        assert_eq!(a.canonical_form(), b.canonical_form());
        assert_ne!(a.canonical_form(), c.canonical_form());
    }

    #[test]
    fn rejects_bad_topologies() {
        assert!(FullTopology::from_edges(3, vec![[0, 1], [1, 2]]).is_err());
        assert!(FullTopology::from_edges(4, vec![[0, 4], [1, 4], [2, 4], [3, 5], [4, 5]]).is_err());
    }

    #[test]
    fn equilateral_triangle_star() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, SQ3 / 2.0)];
        let r = realize_fst(&pts, &topology_from_index(3, 0), &tol()).unwrap();
        let t = r.tree.unwrap();
        assert_abs_diff_eq!(r.length, SQ3, epsilon = 1e-12);
        assert_abs_diff_eq!(t.steiner_points[0].x, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.steiner_points[0].y, SQ3 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn unit_square_vertical_fork() {
        let pts = [
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
        ];
        let r = realize_topology_edges(&pts, vec![[0, 4], [1, 4], [4, 5], [2, 5], [3, 5]], &tol()).unwrap();
        assert_abs_diff_eq!(r.length, 1.0 + SQ3, epsilon = 1e-12);
        // Pairing across the diagonal has no valid embedding.
        let diag = realize_topology_edges(&pts, vec![[0, 4], [2, 4], [4, 5], [1, 5], [3, 5]], &tol()).unwrap();
        assert!(!diag.is_feasible());
        let m = minimum_fst(&pts, &tol()).unwrap();
        assert_abs_diff_eq!(m.length, 1.0 + SQ3, epsilon = 1e-12);
    }

    #[test]
    fn collinear_star_infeasible() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0)];
        let r = realize_fst(&pts, &topology_from_index(3, 0), &tol()).unwrap();
        assert!(!r.is_feasible());
        assert!(r.length.is_infinite());
    }

    #[test]
    fn obtuse_triangle_has_no_fst() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 0.1)];
        assert!(!minimum_fst(&pts, &tol()).unwrap().is_feasible());
    }

    #[test]
    fn two_points_direct_edge() {
        let pts = [Point::new(0.0, 0.0), Point::new(3.0, 4.0)];
        let r = minimum_fst(&pts, &tol()).unwrap();
        assert_abs_diff_eq!(r.length, 5.0, epsilon = 1e-15);
    }

    #[test]
    fn coincident_points_error() {
        let pts = [Point::new(0.0, 0.0), Point::new(0.0, 0.0), Point::new(1.0, 1.0)];
        assert!(matches!(minimum_fst(&pts, &tol()), Err(Error::CoincidentPoints)));
        assert!(matches!(minimum_fst(&pts[..1], &tol()), Err(Error::TooFewPoints { .. })));
    }
}
