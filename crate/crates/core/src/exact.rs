//! Exact Steiner minimal trees by dynamic programming over terminal subsets.
//!
//! Every subset gets its minimum full Steiner tree first. The tree for a set
//! `S` is then either full, or a leaf full component on `R` hanging off the
//! optimal tree for `(S \ R) + P` at a pivot terminal `P` in `R`.

use crate::error::{Error, Result};
use crate::geom::{convex_hull, Point, Tolerance};
use crate::melzak::{minimum_fst, FstResult};
use crate::model::{Instance, SteinerTree};
use crate::par;

pub const DEFAULT_CAP: usize = 11;
const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Witness {
    /// The subset's own minimum full tree.
    Full,
    /// Leaf component on `r` glued at `pivot` onto the tree for the rest.
    Leaf { r: usize, pivot: usize },
}

/// DP tables indexed by terminal bitmask.
#[derive(Debug, Clone)]
pub struct SubsetTable {
    pub n: usize,
    pub fst: Vec<FstResult>,
    pub fst_len: Vec<f64>,
    pub smt_len: Vec<f64>,
    pub smt_witness: Vec<Witness>,
    /// Terminals that are not corners of the convex hull.
    pub hull_interior_count: usize,
    terminals: Vec<Point>,
}

fn members(s: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..n).filter(move |i| s >> i & 1 == 1)
}

impl SubsetTable {
    pub fn build(terminals: &[Point], tol: &Tolerance, cap: usize) -> Result<Self> {
        let n = terminals.len();
        if n == 0 {
            return Err(Error::TooFewPoints { needed: 1, got: 0 });
        }
        if n > cap {
            return Err(Error::TooManyTerminals { n, cap });
        }
        let full = 1usize << n;
        let fst: Vec<FstResult> = par::map_range(full, |s| {
            let sub: Vec<Point> = members(s, n).map(|i| terminals[i]).collect();
            if sub.len() >= 2 {
                minimum_fst(&sub, tol).map(Some)
            } else {
                Ok(None)
            }
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .map(|r| {
            r.unwrap_or(FstResult {
                tree: None,
                length: 0.0,
                topology: crate::melzak::topology_from_index(2, 0),
            })
        })
        .collect();
        let fst_len: Vec<f64> = fst.iter().map(|r| r.length).collect();

        let mut smt_len = vec![0.0; full];
        let mut smt_witness = vec![Witness::Full; full];
        for size in 2..=n {
            let layer: Vec<usize> = (1..full).filter(|s| s.count_ones() as usize == size).collect();
            let solved = par::map_slice(&layer, |&s| best_split(s, n, &fst_len, &smt_len));
            for (&s, (len, w)) in layer.iter().zip(solved) {
                smt_len[s] = len;
                smt_witness[s] = w;
            }
        }

        let hull = convex_hull(terminals, tol);
        Ok(SubsetTable {
            n,
            fst,
            fst_len,
            smt_len,
            smt_witness,
            hull_interior_count: n - hull.len().min(n),
            terminals: terminals.to_vec(),
        })
    }

    pub fn full_mask(&self) -> usize {
        (1 << self.n) - 1
    }

    pub fn length(&self) -> f64 {
        self.smt_len[self.full_mask()]
    }

    /// Leaf-first list of `(subset, full component)` pairs making up the
    /// optimal tree for `mask`.
    pub fn components(&self, mask: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut s = mask;
        while s.count_ones() >= 2 {
            match self.smt_witness[s] {
                Witness::Full => {
                    out.push(s);
                    break;
                }
                Witness::Leaf { r, pivot } => {
                    out.push(r);
                    s = (s & !r) | 1 << pivot;
                }
            }
        }
        out
    }

    /// Glues the full components of the optimal tree for `mask` at their
    /// shared terminals.
    pub fn tree(&self, mask: usize) -> SteinerTree {
        let mut steiner = Vec::new();
        let mut edges = Vec::new();
        for comp in self.components(mask) {
            let local: Vec<usize> = members(comp, self.n).collect();
            let k = local.len();
            let t = self.fst[comp]
                .tree
                .as_ref()
                .expect("witness components are feasible full trees");
            let base = self.n + steiner.len();
            steiner.extend_from_slice(&t.steiner_points);
            let map = |v: usize| if v < k { local[v] } else { base + v - k };
            edges.extend(t.edges.iter().map(|e| [map(e[0]), map(e[1])]));
        }
        SteinerTree::new(self.terminals.clone(), steiner, edges).expect("glued indices are in range")
    }
}

fn best_split(s: usize, n: usize, fst_len: &[f64], smt_len: &[f64]) -> (f64, Witness) {
    let mut best = fst_len[s];
    let mut witness = Witness::Full;
    // Proper subsets r of s with at least two members, in increasing order.
    let mut r = 0usize;
    loop {
        r = (r.wrapping_sub(s)) & s;
        if r == 0 || r == s {
            break;
        }
        if r.count_ones() < 2 || fst_len[r].is_infinite() {
            continue;
        }
        let rest = s & !r;
        for p in members(r, n) {
            let cand = smt_len[rest | 1 << p] + fst_len[r];
            if cand < best * (1.0 - TIE) {
                best = cand;
                witness = Witness::Leaf { r, pivot: p };
            }
        }
    }
    (best, witness)
}

pub fn solve_exact(inst: &Instance, tol: &Tolerance) -> Result<SteinerTree> {
    solve_exact_with_cap(inst, tol, DEFAULT_CAP)
}

pub fn solve_exact_with_cap(inst: &Instance, tol: &Tolerance, cap: usize) -> Result<SteinerTree> {
    let table = SubsetTable::build(&inst.terminals, tol, cap)?;
    Ok(table.tree(table.full_mask()))
}

/// Splits a tree's edges into full components: maximal edge sets connected
/// through Steiner vertices. Returns each component's sorted vertex set.
pub fn decompose_full_components(t: &SteinerTree) -> Result<Vec<Vec<usize>>> {
    t.check_is_tree()?;
    let m = t.edges.len();
    let mut rep: Vec<usize> = (0..m).collect();
    fn find(rep: &mut [usize], mut v: usize) -> usize {
        while rep[v] != v {
            rep[v] = rep[rep[v]];
            v = rep[v];
        }
        v
    }
    let mut first_edge = vec![usize::MAX; t.n_vertices()];
    for (i, e) in t.edges.iter().enumerate() {
        for &v in e {
            if !t.is_steiner(v) {
                continue;
            }
            if first_edge[v] == usize::MAX {
                first_edge[v] = i;
            } else {
                let (a, b) = (find(&mut rep, first_edge[v]), find(&mut rep, i));
                rep[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..m {
        let root = find(&mut rep, i);
        let g = match groups.iter().position(|(r, _)| *r == root) {
            Some(k) => k,
            None => {
                groups.push((root, Vec::new()));
                groups.len() - 1
            }
        };
        groups[g].1.extend_from_slice(&t.edges[i]);
    }
    Ok(groups
        .into_iter()
        .map(|(_, mut vs)| {
            vs.sort_unstable();
            vs.dedup();
            vs
        })
        .collect())
}
