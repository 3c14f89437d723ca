use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use esmt_core::approx::{solve_fptas, FptasCaps};
use esmt_core::cpr::{lambda_1, lambda_v, square_crossover};
use esmt_core::exact::solve_exact;
use esmt_core::geom::euclidean_mst;
use esmt_core::{Instance, Point, Tolerance};

use crate::error::{CliError, CliResult};
use crate::gen::almost_convex;

pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub notes: Vec<String>,
}

impl Table {
    fn new<R: Serialize>(header: Vec<&'static str>, rows: &[R]) -> Self {
        let rows = rows
            .iter()
            .map(|r| match serde_json::to_value(r).expect("rows serialize") {
                serde_json::Value::Object(map) => header
                    .iter()
                    .map(|h| match &map[*h] {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Null => String::new(),
                        v => v.to_string(),
                    })
                    .collect(),
                _ => unreachable!("rows are structs"),
            })
            .collect();
        Table { header, rows, notes: Vec::new() }
    }

    pub fn markdown(&self) -> String {
        let mut s = format!("| {} |\n|{}\n", self.header.join(" | "), "---|".repeat(self.header.len()));
        for r in &self.rows {
            s.push_str(&format!("| {} |\n", r.join(" | ")));
        }
        for n in &self.notes {
            s.push_str(&format!("\n{n}\n"));
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> CliResult<()> {
        let io = |e: csv::Error| CliError::Io(path.to_path_buf(), e.into());
        let mut w = csv::Writer::from_path(path).map_err(io)?;
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.flush().map_err(|e| CliError::Io(path.to_path_buf(), e))
    }
}

#[derive(Serialize)]
struct ThresholdRow {
    quantity: &'static str,
    n: usize,
    value: f64,
}

pub fn thresholds() -> Table {
    let mut rows = Vec::new();
    for n in [4, 5, 6, 8, 12, 13, 20, 40, 100, 500] {
        rows.push(ThresholdRow { quantity: "lambda_v", n, value: lambda_v(n).expect("n >= 4") });
    }
    for n in [13, 20, 40, 100, 500] {
        rows.push(ThresholdRow { quantity: "lambda_1", n, value: lambda_1(n).expect("n >= 13") });
    }
    rows.push(ThresholdRow { quantity: "square_crossover", n: 4, value: square_crossover() });
    Table::new(vec!["quantity", "n", "value"], &rows)
}

#[derive(Serialize)]
struct ScalingRow {
    n: usize,
    seconds: f64,
    smt_length: f64,
    mst_length: f64,
    steiner_ratio: f64,
}

pub fn random_instance(n: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tol = Tolerance::default();
    loop {
        let pts: Vec<Point> = (0..n).map(|_| Point::new(rng.random(), rng.random())).collect();
        if let Ok(inst) = Instance::new(format!("uniform-n{n}-s{seed}"), pts, &tol) {
            return inst;
        }
    }
}

pub fn scaling(min_n: usize, max_n: usize, seed: u64) -> CliResult<Table> {
    let tol = Tolerance::default();
    let mut rows = Vec::new();
    for n in min_n..=max_n {
        let inst = random_instance(n, seed + n as u64);
        let t0 = Instant::now();
        let smt = solve_exact(&inst, &tol)?;
        let seconds = t0.elapsed().as_secs_f64();
        let mst = euclidean_mst(&inst.terminals).length;
        rows.push(ScalingRow { n, seconds, smt_length: smt.length, mst_length: mst, steiner_ratio: smt.length / mst });
    }
    let mut t = Table::new(vec!["n", "seconds", "smt_length", "mst_length", "steiner_ratio"], &rows);
    t.notes.push(format!("parallel backend: {}", esmt_core::par::is_parallel()));
    Ok(t)
}

#[derive(Serialize)]
struct RatioRow {
    instance: String,
    n: usize,
    interior: usize,
    eps: f64,
    grid_vertices: usize,
    fptas_length: f64,
    exact_length: f64,
    ratio: f64,
    bound: f64,
    seconds: f64,
}

/// `(hull, interior, eps, seed)` tuples sized to stay under the default
/// grid cap.
pub fn fptas_corpus() -> Vec<(usize, usize, f64, u64)> {
    let mut out = Vec::new();
    let coarse = [(3, 0), (4, 0), (5, 0), (6, 0), (3, 1), (4, 1), (5, 1), (6, 1), (3, 2), (4, 2), (5, 2), (6, 2), (7, 0), (7, 1), (8, 0)];
    for (i, &(h, f)) in coarse.iter().enumerate() {
        out.push((h, f, 1.0, 100 + i as u64));
    }
    let fine = [(3, 0), (4, 0), (3, 1), (4, 1), (3, 2)];
    for (i, &(h, f)) in fine.iter().cycle().take(15).enumerate() {
        out.push((h, f, 0.5, 200 + i as u64));
    }
    out
}

pub fn fptas_ratio() -> CliResult<Table> {
    let tol = Tolerance::default();
    let mut rows = Vec::new();
    for (h, f, eps, seed) in fptas_corpus() {
        let inst = almost_convex(h, f, seed)?;
        let exact = solve_exact(&inst, &tol)?.length;
        let t0 = Instant::now();
        let sol = solve_fptas(&inst, eps, FptasCaps::default(), &tol)?;
        rows.push(RatioRow {
            instance: inst.name.clone(),
            n: inst.len(),
            interior: f,
            eps,
            grid_vertices: sol.grid_vertices,
            fptas_length: sol.tree.length,
            exact_length: exact,
            ratio: sol.tree.length / exact,
            bound: sol.ratio_bound,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    Ok(Table::new(
        vec!["instance", "n", "interior", "eps", "grid_vertices", "fptas_length", "exact_length", "ratio", "bound", "seconds"],
        &rows,
    ))
}
