//! Slow, independent reference solvers used to cross-check the fast paths.

use crate::approx::{GraphTree, GridGraph};
use crate::error::{Error, Result};
use crate::geom::{dist, euclidean_mst, torricelli_point, Point, Tolerance};
use crate::melzak::{enumerate_full_topologies, FullTopology};
use crate::model::{Instance, SteinerTree};

pub const DEFAULT_ITERATIONS: usize = 10_000;
const REL_STOP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TopologyOptimizationResult {
    /// Steiner node positions, in topology order.
    pub coordinates: Vec<Point>,
    pub length: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn topology_length(pos: &[Point], topo: &FullTopology) -> f64 {
    topo.edges.iter().map(|e| dist(pos[e[0]], pos[e[1]])).sum()
}

/// Minimizes total edge length over Steiner coordinates for a fixed
/// topology by moving each Steiner node to the Torricelli point of its
/// neighbours in turn. Steiner nodes may collapse onto neighbours.
pub fn optimize_steiner_positions(points: &[Point], topo: &FullTopology, iters: usize) -> TopologyOptimizationResult {
    let n = topo.n_terminals;
    assert_eq!(points.len(), n, "point count must match the topology");
    let nodes = topo.n_nodes();
    let adj = topo.adjacency();
    let tol = Tolerance::default();

    let mut pos = points.to_vec();
    for s in n..nodes {
        // Terminals weighted by 2^-depth from s.
        let mut depth = vec![usize::MAX; nodes];
        depth[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        let (mut acc, mut wsum) = (Point::new(0.0, 0.0), 0.0);
        while let Some(v) = queue.pop_front() {
            if v < n {
                let w = 0.5f64.powi(depth[v] as i32);
                acc = acc + points[v] * w;
                wsum += w;
            }
            for &w in &adj[v] {
                if depth[w] == usize::MAX {
                    depth[w] = depth[v] + 1;
                    queue.push_back(w);
                }
            }
        }
        pos.push(acc * (1.0 / wsum));
    }

    let mut length = topology_length(&pos, topo);
    let mut iterations = 0;
    let mut converged = nodes == n;
    while !converged && iterations < iters {
        iterations += 1;
        let joint = joint_step(&pos, topo, &adj, length);
        if topology_length(&joint, topo) < length {
            pos = joint;
        }
        for s in n..nodes {
            let nb = &adj[s];
            pos[s] = torricelli_point(pos[nb[0]], pos[nb[1]], pos[nb[2]], &tol).point();
        }
        let next = topology_length(&pos, topo);
        converged = length - next <= REL_STOP * next;
        length = next.min(length);
    }
    TopologyOptimizationResult {
        coordinates: pos.split_off(n),
        length,
        iterations,
        converged,
    }
}

/// One weighted least-squares step moving every Steiner node at once, with
/// weights `1 / |edge|`. Unlike the per-node sweep it can pull apart Steiner
/// nodes that have collapsed onto each other.
fn joint_step(pos: &[Point], topo: &FullTopology, adj: &[Vec<usize>], length: f64) -> Vec<Point> {
    let n = topo.n_terminals;
    let k = pos.len() - n;
    let floor = 1e-12 * length.max(f64::MIN_POSITIVE);
    let mut a = vec![vec![0.0; k]; k];
    let mut bx = vec![0.0; k];
    let mut by = vec![0.0; k];
    for s in 0..k {
        for &v in &adj[n + s] {
            let w = 1.0 / dist(pos[n + s], pos[v]).max(floor);
            a[s][s] += w;
            if v >= n {
                a[s][v - n] -= w;
            } else {
                bx[s] += w * pos[v].x;
                by[s] += w * pos[v].y;
            }
        }
    }
    // The matrix is a grounded Laplacian: symmetric positive definite and
    // diagonally dominant, so elimination without pivoting is stable.
    for c in 0..k {
        for r in c + 1..k {
            let f = a[r][c] / a[c][c];
            if f != 0.0 {
                for j in c..k {
                    a[r][j] -= f * a[c][j];
                }
                bx[r] -= f * bx[c];
                by[r] -= f * by[c];
            }
        }
    }
    let mut out = pos.to_vec();
    for c in (0..k).rev() {
        let (mut x, mut y) = (bx[c], by[c]);
        for j in c + 1..k {
            x -= a[c][j] * out[n + j].x;
            y -= a[c][j] * out[n + j].y;
        }
        out[n + c] = Point::new(x / a[c][c], y / a[c][c]);
    }
    out
}

pub const BRUTE_FORCE_CAP: usize = 6;

struct Component {
    length: f64,
    topology: FullTopology,
    steiner: Vec<Point>,
}

#[derive(Clone, Copy)]
enum Split {
    Full,
    Glue(usize, usize),
}

/// Exhaustive minimum: every terminal subset gets its best full component by
/// numeric optimization over all full topologies, then subsets are combined
/// by splitting into two overlapping halves that share one terminal.
pub fn brute_force(inst: &Instance) -> Result<SteinerTree> {
    let n = inst.len();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::OracleSizeExceeded(format!("{n} terminals, cap {BRUTE_FORCE_CAP}")));
    }
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let pts = &inst.terminals;
    let full = 1usize << n;
    let members = |s: usize| (0..n).filter(move |i| s >> i & 1 == 1);

    let mut comp: Vec<Option<Component>> = (0..full).map(|_| None).collect();
    for (s, slot) in comp.iter_mut().enumerate() {
        let k = s.count_ones() as usize;
        if k < 2 {
            continue;
        }
        let sub: Vec<Point> = members(s).map(|i| pts[i]).collect();
        for topo in enumerate_full_topologies(k) {
            let r = optimize_steiner_positions(&sub, &topo, DEFAULT_ITERATIONS);
            if slot.as_ref().is_none_or(|c| r.length < c.length) {
                *slot = Some(Component { length: r.length, topology: topo, steiner: r.coordinates });
            }
        }
    }

    let mut smt = vec![0.0f64; full];
    let mut how = vec![Split::Full; full];
    let mut order: Vec<usize> = (1..full).collect();
    order.sort_by_key(|s| s.count_ones());
    for &s in &order {
        if s.count_ones() < 2 {
            continue;
        }
        let mut best = comp[s].as_ref().unwrap().length;
        let mut choice = Split::Full;
        for p in members(s) {
            let rest = s & !(1 << p);
            // a: nonempty proper subset of rest; halves a+p and (rest-a)+p.
            let mut a = (rest - 1) & rest;
            while a > 0 {
                let (s1, s2) = (a | 1 << p, (rest & !a) | 1 << p);
                let c = smt[s1] + smt[s2];
                if c < best {
                    best = c;
                    choice = Split::Glue(s1, s2);
                }
                a = (a - 1) & rest;
            }
        }
        smt[s] = best;
        how[s] = choice;
    }

    let mut steiner = Vec::new();
    let mut edges = Vec::new();
    let mut stack = vec![full - 1];
    while let Some(s) = stack.pop() {
        if s.count_ones() < 2 {
            continue;
        }
        match how[s] {
            Split::Glue(a, b) => {
                stack.push(a);
                stack.push(b);
            }
            Split::Full => {
                let c = comp[s].as_ref().unwrap();
                let local: Vec<usize> = members(s).collect();
                let k = local.len();
                let base = n + steiner.len();
                steiner.extend_from_slice(&c.steiner);
                let map = |v: usize| if v < k { local[v] } else { base + v - k };
                edges.extend(c.topology.edges.iter().map(|e| [map(e[0]), map(e[1])]));
            }
        }
    }
    Ok(contract_short_edges(pts.clone(), steiner, edges))
}

/// Merges endpoints of edges shorter than the length tolerance (collapsed
/// Steiner points), keeping terminals as representatives.
fn contract_short_edges(terminals: Vec<Point>, steiner: Vec<Point>, edges: Vec<[usize; 2]>) -> SteinerTree {
    let n = terminals.len();
    let eps = Tolerance::default().eps_len;
    let total = n + steiner.len();
    let at = |v: usize| if v < n { terminals[v] } else { steiner[v - n] };
    let mut rep: Vec<usize> = (0..total).collect();
    fn find(rep: &mut [usize], mut v: usize) -> usize {
        while rep[v] != v {
            rep[v] = rep[rep[v]];
            v = rep[v];
        }
        v
    }
    for e in &edges {
        if dist(at(e[0]), at(e[1])) <= eps {
            let (a, b) = (find(&mut rep, e[0]), find(&mut rep, e[1]));
            let (lo, hi) = (a.min(b), a.max(b));
            rep[hi] = lo;
        }
    }
    let mut new_id = vec![usize::MAX; total];
    let mut kept = Vec::new();
    for v in 0..total {
        if find(&mut rep, v) == v {
            if v < n {
                new_id[v] = v;
            } else {
                new_id[v] = n + kept.len();
                kept.push(steiner[v - n]);
            }
        }
    }
    let edges: Vec<[usize; 2]> = edges
        .iter()
        .filter_map(|e| {
            let (a, b) = (find(&mut rep, e[0]), find(&mut rep, e[1]));
            (a != b).then(|| [new_id[a], new_id[b]])
        })
        .collect();
    SteinerTree::new(terminals, kept, edges).expect("contracted edges stay in range")
}

pub const GRAPH_ORACLE_MAX_VERTICES: usize = 12;
pub const GRAPH_ORACLE_MAX_TERMINALS: usize = 5;

/// Exact Steiner tree in a small complete Euclidean graph: the best MST over
/// terminals plus every subset of the other vertices.
pub fn graph_steiner_brute_force(g: &GridGraph) -> Result<GraphTree> {
    let terms = g.terminals();
    if g.len() > GRAPH_ORACLE_MAX_VERTICES || terms.len() > GRAPH_ORACLE_MAX_TERMINALS {
        return Err(Error::OracleSizeExceeded(format!(
            "{} vertices / {} terminals, caps {GRAPH_ORACLE_MAX_VERTICES} / {GRAPH_ORACLE_MAX_TERMINALS}",
            g.len(),
            terms.len()
        )));
    }
    let others: Vec<usize> = (0..g.len()).filter(|v| !terms.contains(v)).collect();
    let mut best: Option<GraphTree> = None;
    for mask in 0usize..1 << others.len() {
        let mut ids = terms.clone();
        ids.extend((0..others.len()).filter(|i| mask >> i & 1 == 1).map(|i| others[i]));
        let pts: Vec<Point> = ids.iter().map(|&v| g.vertices[v]).collect();
        let mst = euclidean_mst(&pts);
        if best.as_ref().is_none_or(|b| mst.length < b.length) {
            best = Some(GraphTree {
                edges: mst.edges.iter().map(|&(a, b)| [ids[a], ids[b]]).collect(),
                length: mst.length,
            });
        }
    }
    Ok(best.expect("the empty subset always yields a tree"))
}
