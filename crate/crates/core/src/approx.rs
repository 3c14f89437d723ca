//! Grid discretization of the terminal hull and the interval dynamic
//! program for Steiner trees in the resulting complete Euclidean graph.
//!
//! Terminals on the hull boundary (`K`) are kept in cyclic order; every
//! subtree of a non-crossing tree spans a cyclic interval of them. Tables are
//! keyed by a root vertex, a subset `L` of the other terminals (`R`) and an
//! interval of `K`:
//!
//! * `B(v, X)`: `v` has at least two subtrees, `X` split between them;
//! * `A(v, X)`: `v` hangs by one edge off a tree spanning `X`;
//! * `C(v, X) = min(A, B)`: the best tree on `{v} + X`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{
    convex_hull, dist, euclidean_mst, point_in_convex_polygon, point_segment_distance,
    segments_properly_intersect_eps, Point, Tolerance,
};
use crate::model::{Instance, SteinerTree};
use crate::par;

pub const DEFAULT_MAX_GRID_VERTICES: usize = 2500;
pub const DEFAULT_MAX_INTERIOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VertexKind {
    /// Terminal on the hull boundary.
    Hull,
    /// Terminal strictly inside the hull.
    Interior,
    /// Lattice vertex usable as a Steiner point.
    Candidate,
}

/// Complete graph with Euclidean edge weights. Terminals come first, in the
/// instance's order, followed by lattice candidates.
#[derive(Debug, Clone, Serialize)]
pub struct GridGraph {
    pub vertices: Vec<Point>,
    pub kinds: Vec<VertexKind>,
    /// Boundary terminals in counter-clockwise order.
    pub hull_order: Vec<usize>,
    pub cell: f64,
}

impl GridGraph {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        dist(self.vertices[u], self.vertices[v])
    }

    pub fn n_terminals(&self) -> usize {
        self.kinds.iter().filter(|k| **k != VertexKind::Candidate).count()
    }

    pub fn terminals(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.kinds[v] != VertexKind::Candidate).collect()
    }

    pub fn interior_terminals(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.kinds[v] == VertexKind::Interior).collect()
    }

    /// Graph on explicit vertices; the first `n_terminals` are terminals.
    pub fn from_vertices(vertices: Vec<Point>, n_terminals: usize, tol: &Tolerance) -> Result<Self> {
        if n_terminals < 2 || n_terminals > vertices.len() {
            return Err(Error::InvalidArgument(format!(
                "need 2..={} terminals, got {n_terminals}",
                vertices.len()
            )));
        }
        let hull_order = boundary_order(&vertices[..n_terminals], tol)?;
        let kinds = (0..vertices.len())
            .map(|v| {
                if v >= n_terminals {
                    VertexKind::Candidate
                } else if hull_order.contains(&v) {
                    VertexKind::Hull
                } else {
                    VertexKind::Interior
                }
            })
            .collect();
        Ok(GridGraph { vertices, kinds, hull_order, cell: 0.0 })
    }
}

/// A tree inside a [`GridGraph`], as edges between vertex ids.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphTree {
    pub edges: Vec<[usize; 2]>,
    pub length: f64,
}

impl GraphTree {
    /// Embeds the tree: graph terminals stay terminals, used candidates
    /// become Steiner points in vertex-id order.
    pub fn to_steiner_tree(&self, g: &GridGraph) -> SteinerTree {
        let n = g.n_terminals();
        let mut id = vec![usize::MAX; g.len()];
        (0..n).for_each(|v| id[v] = v);
        let mut steiner = Vec::new();
        let mut used: Vec<usize> = self.edges.iter().flatten().copied().filter(|&v| v >= n).collect();
        used.sort_unstable();
        used.dedup();
        for v in used {
            id[v] = n + steiner.len();
            steiner.push(g.vertices[v]);
        }
        let edges = self.edges.iter().map(|e| [id[e[0]], id[e[1]]]).collect();
        SteinerTree::new(g.vertices[..n].to_vec(), steiner, edges).expect("graph tree ids are in range")
    }
}

/// Terminals on the hull boundary in counter-clockwise order, including
/// those in the middle of hull edges. For collinear input the order runs
/// along the segment.
fn boundary_order(terminals: &[Point], tol: &Tolerance) -> Result<Vec<usize>> {
    let corners = convex_hull(terminals, tol);
    if corners.len() < 2 {
        return Err(Error::DegenerateHull);
    }
    let m = corners.len();
    let edges = if m == 2 { 1 } else { m };
    let mut order = Vec::with_capacity(terminals.len());
    for e in 0..edges {
        let (a, b) = (terminals[corners[e]], terminals[corners[(e + 1) % m]]);
        order.push(corners[e]);
        let ab = b - a;
        let mut on: Vec<(f64, usize)> = (0..terminals.len())
            .filter(|i| !corners.contains(i))
            .filter(|&i| point_segment_distance(terminals[i], a, b) <= tol.eps_len)
            .map(|i| ((terminals[i] - a).dot(ab) / ab.norm_sq(), i))
            .collect();
        on.sort_by(|x, y| x.0.total_cmp(&y.0));
        for (_, i) in on {
            if !order.contains(&i) {
                order.push(i);
            }
        }
    }
    if m == 2 {
        order.push(corners[1]);
    }
    Ok(order)
}

/// Terminals plus lattice points of pitch `D eps / (8n - 12)` inside the
/// hull, plus the crossings of grid lines with hull edges.
pub fn build_grid_graph(inst: &Instance, eps: f64, cap: usize, tol: &Tolerance) -> Result<GridGraph> {
    let n = inst.len();
    if !(eps.is_finite() && eps > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
    }
    if n < 2 {
        return Err(Error::DegenerateHull);
    }
    let pts = &inst.terminals;
    let hull_order = boundary_order(pts, tol)?;
    let corners: Vec<Point> = convex_hull(pts, tol).into_iter().map(|i| pts[i]).collect();

    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in pts {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let d = (hi.x - lo.x).max(hi.y - lo.y);
    let cell = d * eps / (8.0 * n as f64 - 12.0);
    let merge = tol.eps_len * d.max(1.0);

    let area = if corners.len() >= 3 {
        let k = corners.len();
        (0..k).map(|i| corners[i].cross(corners[(i + 1) % k])).sum::<f64>() / 2.0
    } else {
        0.0
    };
    let estimate = area / (cell * cell);
    if estimate > cap as f64 {
        return Err(Error::GridCapExceeded { vertices: estimate as usize, cap });
    }

    let mut vertices = pts.clone();
    let push = |p: Point, vertices: &mut Vec<Point>| -> Result<()> {
        if vertices.iter().any(|q| dist(*q, p) <= merge) {
            return Ok(());
        }
        vertices.push(p);
        if vertices.len() > cap {
            return Err(Error::GridCapExceeded { vertices: vertices.len(), cap });
        }
        Ok(())
    };

    let steps = |span: f64| (span / cell + 1e-9).floor() as i64;
    let (nx, ny) = (steps(hi.x - lo.x), steps(hi.y - lo.y));
    if corners.len() >= 3 {
        for i in 0..=nx {
            for j in 0..=ny {
                let p = Point::new(lo.x + i as f64 * cell, lo.y + j as f64 * cell);
                if point_in_convex_polygon(p, &corners, tol.eps_len) {
                    push(p, &mut vertices)?;
                }
            }
        }
    }
    let k = corners.len();
    let hull_edges = if k == 2 { 1 } else { k };
    for e in 0..hull_edges {
        let (a, b) = (corners[e], corners[(e + 1) % k]);
        let mut hits = Vec::new();
        if (b.x - a.x).abs() > merge {
            for i in 0..=nx {
                let x = lo.x + i as f64 * cell;
                let t = (x - a.x) / (b.x - a.x);
                if (0.0..=1.0).contains(&t) {
                    hits.push(Point::new(x, a.y + t * (b.y - a.y)));
                }
            }
        }
        if (b.y - a.y).abs() > merge {
            for j in 0..=ny {
                let y = lo.y + j as f64 * cell;
                let t = (y - a.y) / (b.y - a.y);
                if (0.0..=1.0).contains(&t) {
                    hits.push(Point::new(a.x + t * (b.x - a.x), y));
                }
            }
        }
        for p in hits {
            push(p, &mut vertices)?;
        }
    }

    let kinds = (0..vertices.len())
        .map(|v| {
            if v >= n {
                VertexKind::Candidate
            } else if hull_order.contains(&v) {
                VertexKind::Hull
            } else {
                VertexKind::Interior
            }
        })
        .collect();
    Ok(GridGraph { vertices, kinds, hull_order, cell })
}

/// Terminal set `L + I`: `l` is a bitmask over the interior terminals and
/// the interval covers `len` consecutive boundary terminals from `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Key {
    l: usize,
    start: usize,
    len: usize,
}

struct Dp<'a> {
    g: &'a GridGraph,
    k: Vec<usize>,
    r: Vec<usize>,
    m: usize,
    per: usize,
    b: Vec<Vec<f64>>,
    a: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    /// Interval-removal values `G(w, X - w)` for each terminal `w` in `X`.
    gw: Vec<Vec<(usize, f64)>>,
}

impl<'a> Dp<'a> {
    fn key(&self, l: usize, start: usize, len: usize) -> Key {
        if len == 0 || len == self.m {
            Key { l, start: 0, len }
        } else {
            Key { l, start: start % self.m, len }
        }
    }

    fn id(&self, k: Key) -> usize {
        let slot = if k.len == 0 {
            0
        } else if k.len == self.m {
            1
        } else {
            2 + (k.len - 1) * self.m + k.start
        };
        k.l * self.per + slot
    }

    fn size(k: Key) -> usize {
        k.l.count_ones() as usize + k.len
    }

    fn c_at(&self, k: Key, v: usize) -> f64 {
        if Self::size(k) == 0 {
            0.0
        } else {
            self.c[self.id(k)][v]
        }
    }

    /// Two-way splits of `X` into non-empty interval-shaped parts.
    fn splits(&self, k: Key) -> Vec<(Key, Key)> {
        let mut out = Vec::new();
        let mut l1 = k.l;
        loop {
            let l2 = k.l ^ l1;
            if k.len < self.m {
                for j in 0..=k.len {
                    let x1 = self.key(l1, k.start, j);
                    let x2 = self.key(l2, k.start + j, k.len - j);
                    if Self::size(x1) > 0 && Self::size(x2) > 0 {
                        out.push((x1, x2));
                    }
                }
            } else {
                for c in 0..self.m {
                    for j in 0..=self.m {
                        if (j == 0 || j == self.m) && c > 0 {
                            continue;
                        }
                        let x1 = self.key(l1, c, j);
                        let x2 = self.key(l2, c + j, self.m - j);
                        if Self::size(x1) > 0 && Self::size(x2) > 0 {
                            out.push((x1, x2));
                        }
                    }
                }
            }
            if l1 == 0 {
                break;
            }
            l1 = (l1 - 1) & k.l;
        }
        out
    }

    /// Ways to attach the rest of `X` below terminal `w` in `X`, as lists of
    /// sub-keys rooted at `w`.
    fn removals(&self, k: Key) -> Vec<(usize, Vec<Key>)> {
        let mut out = Vec::new();
        for (i, &w) in self.r.iter().enumerate() {
            if k.l >> i & 1 == 1 {
                out.push((w, vec![self.key(k.l & !(1 << i), k.start, k.len)]));
            }
        }
        for off in 0..k.len {
            let pos = (k.start + off) % self.m;
            let w = self.k[pos];
            if k.len == self.m {
                out.push((w, vec![self.key(k.l, pos + 1, self.m - 1)]));
                continue;
            }
            let mut l1 = k.l;
            loop {
                let left = self.key(l1, k.start, off);
                let right = self.key(k.l ^ l1, pos + 1, k.len - off - 1);
                out.push((w, vec![left, right]));
                if l1 == 0 {
                    break;
                }
                l1 = (l1 - 1) & k.l;
            }
        }
        out
    }

    fn removal_value(&self, w: usize, parts: &[Key]) -> f64 {
        parts.iter().map(|&p| self.c_at(p, w)).sum()
    }

    fn solve_state(&self, k: Key) -> (Vec<f64>, Vec<(usize, f64)>, Vec<f64>, Vec<f64>) {
        let nv = self.g.len();
        let mut b = vec![f64::INFINITY; nv];
        for (x1, x2) in self.splits(k) {
            let (c1, c2) = (&self.c[self.id(x1)], &self.c[self.id(x2)]);
            for u in 0..nv {
                let s = c1[u] + c2[u];
                if s < b[u] {
                    b[u] = s;
                }
            }
        }
        let mut gw: Vec<(usize, f64)> = Vec::new();
        for (w, parts) in self.removals(k) {
            let val = self.removal_value(w, &parts);
            match gw.iter_mut().find(|(x, _)| *x == w) {
                Some(e) => e.1 = e.1.min(val),
                None => gw.push((w, val)),
            }
        }
        let mut by_b: Vec<usize> = (0..nv).filter(|&u| b[u].is_finite()).collect();
        by_b.sort_by(|&x, &y| b[x].total_cmp(&b[y]));
        let verts = &self.g.vertices;
        let mut a = vec![f64::INFINITY; nv];
        for (v, av) in a.iter_mut().enumerate() {
            let mut best = f64::INFINITY;
            for &(w, val) in &gw {
                let s = val + dist(verts[w], verts[v]);
                if s < best {
                    best = s;
                }
            }
            for &u in &by_b {
                if b[u] >= best {
                    break;
                }
                let s = b[u] + dist(verts[u], verts[v]);
                if s < best {
                    best = s;
                }
            }
            *av = best;
        }
        let c = (0..nv).map(|v| if b[v] < a[v] { b[v] } else { a[v] }).collect();
        (b, gw, a, c)
    }

    fn run(&mut self) {
        let full_l = (1usize << self.r.len()) - 1;
        let max_size = self.r.len() + self.m;
        for size in 1..=max_size {
            let mut layer = Vec::new();
            for l in 0..=full_l {
                let len = size as isize - l.count_ones() as isize;
                if len < 0 || len as usize > self.m {
                    continue;
                }
                let len = len as usize;
                let starts = if len == 0 || len == self.m { 1 } else { self.m };
                layer.extend((0..starts).map(|s| self.key(l, s, len)));
            }
            let solved = par::map_slice(&layer, |&k| self.solve_state(k));
            for (k, (b, gw, a, c)) in layer.into_iter().zip(solved) {
                let id = self.id(k);
                self.b[id] = b;
                self.gw[id] = gw;
                self.a[id] = a;
                self.c[id] = c;
            }
        }
    }

    fn build_c(&self, v: usize, k: Key, edges: &mut Vec<[usize; 2]>) {
        if Self::size(k) == 0 {
            return;
        }
        let id = self.id(k);
        if self.b[id][v] < self.a[id][v] {
            self.build_b(v, k, edges);
        } else {
            self.build_a(v, k, edges);
        }
    }

    fn build_b(&self, u: usize, k: Key, edges: &mut Vec<[usize; 2]>) {
        let target = self.b[self.id(k)][u];
        for (x1, x2) in self.splits(k) {
            if self.c[self.id(x1)][u] + self.c[self.id(x2)][u] == target {
                self.build_c(u, x1, edges);
                self.build_c(u, x2, edges);
                return;
            }
        }
        unreachable!("B value has a matching split");
    }

    fn build_a(&self, v: usize, k: Key, edges: &mut Vec<[usize; 2]>) {
        let id = self.id(k);
        let target = self.a[id][v];
        let verts = &self.g.vertices;
        for &(w, val) in &self.gw[id] {
            if val + dist(verts[w], verts[v]) == target {
                if w != v {
                    edges.push([w, v]);
                }
                let parts = self
                    .removals(k)
                    .into_iter()
                    .find(|(x, p)| *x == w && self.removal_value(w, p) == val)
                    .expect("removal value has a matching split")
                    .1;
                for p in parts {
                    self.build_c(w, p, edges);
                }
                return;
            }
        }
        let b = &self.b[id];
        for u in 0..self.g.len() {
            if b[u] + dist(verts[u], verts[v]) == target {
                if u != v {
                    edges.push([u, v]);
                }
                self.build_b(u, k, edges);
                return;
            }
        }
        unreachable!("A value has a matching attachment");
    }
}

/// Minimum Steiner tree in `g` spanning all its terminals, under the
/// interval structure of non-crossing trees.
pub fn solve_graph_smt_interval(g: &GridGraph, max_interior: usize) -> Result<GraphTree> {
    let r = g.interior_terminals();
    if r.len() > max_interior {
        return Err(Error::InteriorCapExceeded { interior: r.len(), cap: max_interior });
    }
    let m = g.hull_order.len();
    if m < 2 {
        return Err(Error::DegenerateHull);
    }
    let per = 2 + (m - 1) * m;
    let states = per << r.len();
    let mut dp = Dp {
        g,
        k: g.hull_order.clone(),
        r: r.clone(),
        m,
        per,
        b: vec![Vec::new(); states],
        a: vec![Vec::new(); states],
        c: vec![Vec::new(); states],
        gw: vec![Vec::new(); states],
    };
    dp.run();

    let (root, key) = if r.is_empty() {
        (dp.k[0], dp.key(0, 1, m - 1))
    } else {
        (r[0], dp.key(((1 << r.len()) - 1) & !1, 0, m))
    };
    let mut edges = Vec::new();
    dp.build_c(root, key, &mut edges);
    Ok(tidy(g, &edges))
}

/// Re-spans the vertices a tree uses by their Euclidean MST and drops
/// candidate vertices of degree at most two, one at a time. Length never
/// increases and the result has no crossing edges.
fn tidy(g: &GridGraph, edges: &[[usize; 2]]) -> GraphTree {
    let mut keep: Vec<usize> = g.terminals();
    let mut extra: Vec<usize> = edges.iter().flatten().copied().filter(|&v| g.kinds[v] == VertexKind::Candidate).collect();
    extra.sort_unstable();
    extra.dedup();
    keep.extend(extra);
    loop {
        let pts: Vec<Point> = keep.iter().map(|&v| g.vertices[v]).collect();
        let mst = euclidean_mst(&pts);
        let mut deg = vec![0usize; keep.len()];
        for &(a, b) in &mst.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        match (0..keep.len()).find(|&i| g.kinds[keep[i]] == VertexKind::Candidate && deg[i] <= 2) {
            Some(i) => {
                keep.remove(i);
            }
            None => {
                return GraphTree {
                    edges: mst.edges.iter().map(|&(a, b)| [keep[a], keep[b]]).collect(),
                    length: mst.length,
                };
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FptasCaps {
    pub max_grid_vertices: usize,
    pub max_interior: usize,
}

impl Default for FptasCaps {
    fn default() -> Self {
        FptasCaps { max_grid_vertices: DEFAULT_MAX_GRID_VERTICES, max_interior: DEFAULT_MAX_INTERIOR }
    }
}

#[derive(Debug, Clone)]
pub struct FptasSolution {
    pub tree: SteinerTree,
    /// Guaranteed bound on length over the optimum.
    pub ratio_bound: f64,
    pub grid_vertices: usize,
    pub cell: f64,
}

pub fn solve_fptas(inst: &Instance, eps: f64, caps: FptasCaps, tol: &Tolerance) -> Result<FptasSolution> {
    let g = build_grid_graph(inst, eps, caps.max_grid_vertices, tol)?;
    let gt = solve_graph_smt_interval(&g, caps.max_interior)?;
    Ok(FptasSolution {
        tree: gt.to_steiner_tree(&g),
        ratio_bound: 1.0 + eps,
        grid_vertices: g.len(),
        cell: g.cell,
    })
}

/// Removing any edge leaves each side holding a cyclic interval of the
/// boundary terminals.
pub fn interval_property_holds(t: &SteinerTree, tol: &Tolerance) -> Result<bool> {
    t.check_is_tree()?;
    if t.n_terminals() < 2 {
        return Ok(true);
    }
    let order = boundary_order(&t.terminals, tol)?;
    let adj = t.adjacency();
    for e in &t.edges {
        let mut side = vec![false; t.n_vertices()];
        side[e[0]] = true;
        let mut stack = vec![e[0]];
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !side[w] && !(v == e[0] && w == e[1]) {
                    side[w] = true;
                    stack.push(w);
                }
            }
        }
        let flags: Vec<bool> = order.iter().map(|&k| side[k]).collect();
        let changes = (0..flags.len()).filter(|&i| flags[i] != flags[(i + 1) % flags.len()]).count();
        if changes > 2 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Pairs of non-adjacent edges that properly cross.
pub fn crossing_edges(t: &SteinerTree, tol: &Tolerance) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, e) in t.edges.iter().enumerate() {
        for (j, f) in t.edges.iter().enumerate().skip(i + 1) {
            if e.iter().any(|x| f.contains(x)) {
                continue;
            }
            if segments_properly_intersect_eps(t.vertex(e[0]), t.vertex(e[1]), t.vertex(f[0]), t.vertex(f[1]), tol.eps_len) {
                out.push((i, j));
            }
        }
    }
    out
}
