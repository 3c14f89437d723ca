//! `esmt`: generate instances, solve them, check trees, run benchmarks.

mod bench;
mod error;
mod gen;
mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use esmt_core::approx::{solve_fptas, FptasCaps, DEFAULT_MAX_GRID_VERTICES, DEFAULT_MAX_INTERIOR};
use esmt_core::cpr::{generate_cpr_instance, solve_cpr, CprSpec, TopologyTag};
use esmt_core::exact::{solve_exact_with_cap, DEFAULT_CAP};
use esmt_core::geom::euclidean_mst;
use esmt_core::model::{check_lune_property, validate_smt_structure, Violation};
use esmt_core::oracle::{brute_force, BRUTE_FORCE_CAP};
use esmt_core::{Instance, SteinerTree, Tolerance, ValidationReport};

use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "esmt", version, about = "Euclidean Steiner minimal trees")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance file.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Solve an instance and write the tree as JSON.
    Solve(SolveArgs),
    /// Validate a tree against its instance.
    Check {
        tree: PathBuf,
        instance: PathBuf,
        /// Also compare the length with brute force (at most 6 terminals).
        #[arg(long)]
        oracle: bool,
    },
    /// Print a benchmark table as markdown.
    Bench {
        #[arg(value_enum)]
        suite: Suite,
        /// Also write the table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 5)]
        min_n: usize,
        #[arg(long, default_value_t = 9)]
        max_n: usize,
    },
}

#[derive(Subcommand)]
enum GenCmd {
    /// Two concentric parallel regular n-gons.
    Cpr {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        lambda: f64,
        #[arg(long, default_value_t = 0.0)]
        rotation: f64,
        #[arg(long, default_value_t = 1.0)]
        inner_side: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Points in convex position plus a few interior points.
    AlmostConvex {
        #[arg(long)]
        hull: usize,
        #[arg(long)]
        interior: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Exact,
    Cpr,
    Fptas,
    Mst,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Thresholds,
    Scaling,
    FptasRatio,
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    method: Method,
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Approximation parameter, required for fptas.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_GRID_VERTICES)]
    max_grid_vertices: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_INTERIOR)]
    max_interior: usize,
    #[arg(long, default_value_t = DEFAULT_CAP)]
    max_terminals: usize,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))
}

fn write_out(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(p.to_path_buf(), e)),
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))
        }
    }
}

fn gen(cmd: GenCmd) -> CliResult<()> {
    let (inst, out) = match cmd {
        GenCmd::Cpr { n, lambda, rotation, inner_side, out } => {
            let spec = CprSpec { rotation, inner_side, ..CprSpec::new(n, lambda)? };
            (generate_cpr_instance(&spec)?, out)
        }
        GenCmd::AlmostConvex { hull, interior, seed, out } => (gen::almost_convex(hull, interior, seed)?, out),
    };
    write_out(out.as_deref(), &inst.to_json())
}

fn mst_tree(inst: &Instance) -> CliResult<SteinerTree> {
    let mst = euclidean_mst(&inst.terminals);
    let edges = mst.edges.iter().map(|&(a, b)| [a, b]).collect();
    Ok(SteinerTree::new(inst.terminals.clone(), Vec::new(), edges)?)
}

fn solve(args: SolveArgs, tol: &Tolerance) -> CliResult<()> {
    let inst = Instance::from_json(&read(&args.input)?, tol)?;
    let mut summary = serde_json::Map::new();
    let mut cpr_spec = None;
    let tree = match args.method {
        Method::Exact => solve_exact_with_cap(&inst, tol, args.max_terminals)?,
        Method::Mst => mst_tree(&inst)?,
        Method::Fptas => {
            let eps = args.eps.ok_or_else(|| CliError::Usage("--eps is required for --method fptas".into()))?;
            let caps = FptasCaps { max_grid_vertices: args.max_grid_vertices, max_interior: args.max_interior };
            let sol = solve_fptas(&inst, eps, caps, tol)?;
            summary.insert("ratio_bound".into(), json!(sol.ratio_bound));
            summary.insert("grid_vertices".into(), json!(sol.grid_vertices));
            summary.insert("cell".into(), json!(sol.cell));
            sol.tree
        }
        Method::Cpr => {
            let spec = CprSpec::from_metadata(&inst)?;
            let sol = solve_cpr(&spec, tol)?;
            if sol.topology_tag == TopologyTag::UnsupportedRegime {
                let reason = sol.reason.unwrap_or_default();
                let msg = json!({
                    "method": "cpr",
                    "topology_tag": sol.topology_tag,
                    "reason": reason,
                });
                println!("{msg}");
                return Err(CliError::Unsupported(reason));
            }
            summary.insert("topology_tag".into(), json!(sol.topology_tag));
            summary.insert("predicted_length".into(), json!(sol.predicted_length));
            cpr_spec = Some(spec);
            sol.tree.expect("supported regimes carry a tree")
        }
    };
    write_out(args.out.as_deref(), &tree.to_json())?;
    if let Some(p) = &args.svg {
        fs::write(p, svg::render(&tree, cpr_spec.as_ref())).map_err(|e| CliError::Io(p.clone(), e))?;
    }
    let method = args.method.to_possible_value().expect("no skipped variants");
    summary.insert("method".into(), json!(method.get_name()));
    summary.insert("length".into(), json!(tree.length));
    summary.insert("terminals".into(), json!(tree.n_terminals()));
    summary.insert("steiner_points".into(), json!(tree.steiner_points.len()));
    eprintln!("{}", serde_json::Value::Object(summary));
    Ok(())
}

fn same_terminals(t: &SteinerTree, inst: &Instance, tol: &Tolerance) -> CliResult<()> {
    if t.terminals.len() != inst.terminals.len() {
        return Err(CliError::Mismatch(format!(
            "tree has {} terminals, instance has {}",
            t.terminals.len(),
            inst.terminals.len()
        )));
    }
    for (i, (a, b)) in t.terminals.iter().zip(&inst.terminals).enumerate() {
        if esmt_core::geom::dist(*a, *b) > tol.eps_len {
            return Err(CliError::Mismatch(format!("terminal {i} differs")));
        }
    }
    Ok(())
}

fn check(tree: &Path, instance: &Path, oracle: bool, tol: &Tolerance) -> CliResult<()> {
    let t = SteinerTree::from_json(&read(tree)?, tol)?;
    let inst = Instance::from_json(&read(instance)?, tol)?;
    same_terminals(&t, &inst, tol)?;
    let mut report = validate_smt_structure(&t, tol)?;
    report.merge(check_lune_property(&t, tol));
    if oracle {
        report.merge(oracle_report(&t, &inst)?);
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    eprintln!("{}", human_summary(&report, &t));
    if report.passed {
        Ok(())
    } else {
        Err(CliError::CheckFailed)
    }
}

fn oracle_report(t: &SteinerTree, inst: &Instance) -> CliResult<ValidationReport> {
    let mut r = ValidationReport { passed: true, ..Default::default() };
    if inst.len() > BRUTE_FORCE_CAP {
        r.notes.push(format!("oracle skipped: {} terminals exceed the brute-force cap", inst.len()));
        return Ok(r);
    }
    let best = brute_force(inst)?.length;
    let rel = (t.length - best).abs() / best.max(1e-300);
    if rel > 1e-6 {
        r.passed = false;
        r.violations.push(Violation { check: "oracle_length".into(), location: "tree".into(), value: rel });
    }
    r.notes.push(format!("brute-force length {best}"));
    Ok(r)
}

fn human_summary(r: &ValidationReport, t: &SteinerTree) -> String {
    let mut s = format!(
        "{}: {} terminals, {} Steiner points, length {}",
        if r.passed { "PASSED" } else { "FAILED" },
        t.n_terminals(),
        t.steiner_points.len(),
        t.length
    );
    for v in &r.violations {
        s.push_str(&format!("\n  {v}"));
    }
    for n in &r.notes {
        s.push_str(&format!("\n  note: {n}"));
    }
    s
}

fn run_bench(suite: Suite, csv: Option<PathBuf>, seed: u64, min_n: usize, max_n: usize) -> CliResult<()> {
    let table = match suite {
        Suite::Thresholds => bench::thresholds(),
        Suite::Scaling => {
            if min_n < 2 || min_n > max_n || max_n > DEFAULT_CAP {
                return Err(CliError::Usage(format!("need 2 <= min-n <= max-n <= {DEFAULT_CAP}")));
            }
            bench::scaling(min_n, max_n, seed)?
        }
        Suite::FptasRatio => bench::fptas_ratio()?,
    };
    print!("{}", table.markdown());
    if let Some(p) = csv {
        table.write_csv(&p)?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    let tol = Tolerance::default();
    match cli.cmd {
        Cmd::Gen(g) => gen(g),
        Cmd::Solve(args) => solve(args, &tol),
        Cmd::Check { tree, instance, oracle } => check(&tree, &instance, oracle, &tol),
        Cmd::Bench { suite, csv, seed, min_n, max_n } => run_bench(suite, csv, seed, min_n, max_n),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
