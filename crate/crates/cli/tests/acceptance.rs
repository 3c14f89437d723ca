//! One PASS/FAIL line per acceptance criterion. Lines go straight to stdout
//! so they show up even when the harness captures output.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use esmt_core::approx::{
    build_grid_graph, crossing_edges, interval_property_holds, solve_fptas, solve_graph_smt_interval, FptasCaps,
    GridGraph,
};
use esmt_core::cpr::{
    build_vertical_fork, generate_cpr_instance, lambda_1, lambda_v, solve_cpr, square_crossover,
    square_topology_lengths, vertical_fork_length, CprSpec, TopologyTag,
};
use esmt_core::exact::solve_exact;
use esmt_core::geom::{dist, euclidean_mst};
use esmt_core::melzak::{enumerate_full_topologies, minimum_fst, topology_count, FullTopology};
use esmt_core::model::{check_lune_property, validate_smt_structure};
use esmt_core::oracle::{brute_force, graph_steiner_brute_force, optimize_steiner_positions, DEFAULT_ITERATIONS};
use esmt_core::{Instance, Point, Tolerance};

const SQ3: f64 = 1.732_050_807_568_877_2;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Collects failure reasons for one criterion.
#[derive(Default)]
struct Check {
    failures: Vec<String>,
}

impl Check {
    fn expect(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

fn report(id: u32, title: &str, budget: Duration, body: impl FnOnce(&mut Check)) -> bool {
    let mut c = Check::default();
    let t0 = Instant::now();
    body(&mut c);
    let took = t0.elapsed();
    c.expect(took <= budget, || format!("took {took:?}, budget {budget:?}"));
    let pass = c.failures.is_empty();
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{} criterion {id}: {title} ({:.3} s)",
        if pass { "PASS" } else { "FAIL" },
        took.as_secs_f64()
    );
    for f in c.failures.iter().take(10) {
        let _ = writeln!(out, "    {f}");
    }
    pass
}

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_esmt"))
}

fn run(args: &[&str]) -> Output {
    exe().args(args).output().expect("esmt runs")
}

fn lambda_table(c: &mut Check) {
    let expected = [(13, "23.3987"), (20, "2.6719"), (40, "1.4574"), (100, "1.1437"), (500, "1.0258")];
    for (n, want) in expected {
        let got = format!("{:.4}", lambda_1(n).unwrap());
        c.expect(got == want, || format!("lambda_1({n}) = {got}, want {want}"));
    }
}

fn unit_square(c: &mut Check) {
    let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)];
    let inst = Instance::new("unit-square", pts.clone(), &tol()).unwrap();
    let fst = minimum_fst(&pts, &tol()).unwrap();
    let smooth = optimize_steiner_positions(&pts, &fst.topology, DEFAULT_ITERATIONS).length;
    let values = [
        ("solve_exact", solve_exact(&inst, &tol()).unwrap().length),
        ("minimum_fst", fst.length),
        ("brute_force", brute_force(&inst).unwrap().length),
        ("optimize_steiner_positions", smooth),
    ];
    for (name, v) in values {
        c.expect((v - (1.0 + SQ3)).abs() <= 1e-9, || format!("{name} = {v}"));
        for (other, w) in values {
            c.expect((v - w).abs() <= 1e-9, || format!("{name} = {v} vs {other} = {w}"));
        }
    }
}

fn three_gon(c: &mut Check) {
    for lambda in [1.5, 2.0, 10.0] {
        let spec = CprSpec::new(3, lambda).unwrap();
        let sol = solve_cpr(&spec, &tol()).unwrap();
        let t = sol.tree.expect("3-gon is supported");
        c.expect((t.length - SQ3 * lambda).abs() <= 1e-9, || format!("lambda {lambda}: cpr {} vs {}", t.length, SQ3 * lambda));
        let exact = solve_exact(&generate_cpr_instance(&spec).unwrap(), &tol()).unwrap().length;
        c.expect((t.length - exact).abs() <= 1e-6, || format!("lambda {lambda}: cpr {} vs exact {exact}", t.length));
    }
}

fn square_crossover_check(c: &mut Check) {
    c.expect((lambda_v(4).unwrap() - (2.0 + SQ3)).abs() <= 1e-12, || "lambda_v(4) != 2 + sqrt 3".into());
    let (one, two) = square_topology_lengths(18.9);
    c.expect(two.is_some_and(|t| one < t), || format!("lambda 18.9: I {one}, II {two:?}"));
    let (one, two) = square_topology_lengths(19.1);
    c.expect(two.is_some_and(|t| t < one), || format!("lambda 19.1: I {one}, II {two:?}"));
    let x = square_crossover();
    c.expect((x - 18.972).abs() <= 5e-4, || format!("crossover {x}"));
    for lambda in [5.0, 10.0] {
        let spec = CprSpec::new(4, lambda).unwrap();
        let t = solve_cpr(&spec, &tol()).unwrap().tree.expect("square is supported");
        let exact = solve_exact(&generate_cpr_instance(&spec).unwrap(), &tol()).unwrap().length;
        c.expect((t.length - exact).abs() <= 1e-6, || format!("lambda {lambda}: cpr {} vs exact {exact}", t.length));
    }
}

fn singly_connected(c: &mut Check) {
    for (n, lambda) in [(13usize, 30.0), (20, 5.0), (100, 2.0)] {
        let spec = CprSpec::new(n, lambda).unwrap();
        let sol = solve_cpr(&spec, &tol()).unwrap();
        c.expect(sol.topology_tag == TopologyTag::SinglyConnected, || format!("n {n}: tag {:?}", sol.topology_tag));
        let Some(t) = sol.tree else {
            c.failures.push(format!("n {n}: no tree"));
            continue;
        };
        let nf = n as f64;
        let closed = (lambda - 1.0) / (2.0 * (std::f64::consts::PI / nf).tan()) + (nf - 2.0 + SQ3 / 2.0) * (lambda + 1.0);
        let sum = t.edge_length_sum();
        c.expect(rel(sum, closed) <= 1e-9, || format!("n {n}: edge sum {sum} vs {closed}"));
        let r = validate_smt_structure(&t, &tol()).unwrap();
        c.expect(r.passed, || format!("n {n}: {:?}", r.violations));
        let mst = euclidean_mst(&t.terminals).length;
        c.expect(sum <= mst, || format!("n {n}: length {sum} above MST {mst}"));
    }
}

fn vertical_fork(c: &mut Check) {
    for n in [4usize, 6, 8, 13] {
        let lv = lambda_v(n).unwrap();
        for lambda in [lv, lv + 0.5, 2.0 * lv] {
            let spec = CprSpec::new(n, lambda).unwrap();
            let (a, b, p, q) = (spec.inner(0), spec.inner(1), spec.outer(0), spec.outer(1));
            let f = match build_vertical_fork(a, b, p, q, n, &tol()) {
                Ok(f) => f,
                Err(e) => {
                    c.failures.push(format!("n {n} lambda {lambda}: {e}"));
                    continue;
                }
            };
            let want = vertical_fork_length(n, lambda);
            c.expect((f.tree.length - want).abs() <= 1e-9, || format!("n {n} lambda {lambda}: {} vs {want}", f.tree.length));
            // M, S1, S2, N in order along MN.
            let axis = f.n - f.m;
            let len = axis.norm();
            let at = |x: Point| (x - f.m).dot(axis) / len;
            let off = |x: Point| (x - f.m).cross(axis).abs() / len;
            let (t1, t2) = (at(f.s1), at(f.s2));
            let e = 1e-9 * len.max(1.0);
            c.expect(off(f.s1) <= e && off(f.s2) <= e, || format!("n {n} lambda {lambda}: Steiner points off MN"));
            c.expect(-e <= t1 && t1 <= t2 + e && t2 <= len + e, || {
                format!("n {n} lambda {lambda}: order M,S1,S2,N broken ({t1}, {t2}, {len})")
            });
            let topo = FullTopology::from_edges(4, vec![[0, 4], [1, 4], [4, 5], [5, 2], [5, 3]]).unwrap();
            let smooth = optimize_steiner_positions(&[a, b, p, q], &topo, DEFAULT_ITERATIONS).length;
            c.expect(rel(smooth, want) <= 1e-6, || format!("n {n} lambda {lambda}: smoothing {smooth} vs {want}"));
        }
        let spec = CprSpec::new(n, lv - 0.1).unwrap();
        let below = build_vertical_fork(spec.inner(0), spec.inner(1), spec.outer(0), spec.outer(1), n, &tol());
        c.expect(below.is_err(), || format!("n {n}: fork below lambda_v did not error"));
    }
}

fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    loop {
        let pts: Vec<Point> = (0..n).map(|_| Point::new(rng.random(), rng.random())).collect();
        let spread = pts.iter().enumerate().all(|(i, p)| pts[..i].iter().all(|q| dist(*p, *q) > 1e-3));
        if spread {
            return Instance::new("random", pts, &tol()).unwrap();
        }
    }
}

fn exact_vs_oracle(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..200 {
        let n = [4, 5, 6][i % 3];
        let inst = random_instance(&mut rng, n);
        let e = solve_exact(&inst, &tol()).unwrap();
        let b = brute_force(&inst).unwrap();
        c.expect(rel(e.length, b.length) <= 1e-6, || format!("#{i}: exact {} brute {}", e.length, b.length));
        let r = validate_smt_structure(&e, &tol()).unwrap();
        c.expect(r.passed, || format!("#{i}: structure {:?}", r.violations));
        c.expect(check_lune_property(&e, &tol()).passed, || format!("#{i}: lune"));
        let mst = euclidean_mst(&inst.terminals).length;
        c.expect(e.length <= mst * (1.0 + 1e-12) && e.length >= 0.5 * mst, || {
            format!("#{i}: smt {} mst {mst}", e.length)
        });
    }
}

fn topology_enumeration(c: &mut Check) {
    for (n, want) in [(3usize, 1u64), (4, 3), (5, 15), (6, 105), (7, 945)] {
        c.expect(topology_count(n) == want, || format!("n {n}: count {}", topology_count(n)));
        let mut forms: Vec<Vec<u64>> = enumerate_full_topologies(n).map(|t| t.canonical_form()).collect();
        let emitted = forms.len() as u64;
        forms.sort();
        forms.dedup();
        c.expect(emitted == want && forms.len() as u64 == want, || {
            format!("n {n}: emitted {emitted}, distinct {}", forms.len())
        });
    }
}

/// `(hull, interior, eps, seed)`: 15 coarse instances up to 8 terminals and
/// 15 fine ones up to 5.
fn fptas_corpus() -> Vec<(usize, usize, f64, u64)> {
    let coarse = [(3, 0), (4, 0), (5, 0), (6, 0), (3, 1), (4, 1), (5, 1), (6, 1), (3, 2), (4, 2), (5, 2), (6, 2), (7, 0), (7, 1), (8, 0)];
    let fine = [(3, 0), (4, 0), (3, 1), (4, 1), (3, 2)];
    let mut out: Vec<_> = coarse.iter().enumerate().map(|(i, &(h, f))| (h, f, 1.0, 100 + i as u64)).collect();
    out.extend(fine.iter().cycle().take(15).enumerate().map(|(i, &(h, f))| (h, f, 0.5, 200 + i as u64)));
    out
}

fn gen_almost_convex(hull: usize, interior: usize, seed: u64) -> Instance {
    let out = run(&["gen", "almost-convex", "--hull", &hull.to_string(), "--interior", &interior.to_string(), "--seed", &seed.to_string()]);
    assert!(out.status.success(), "gen failed: {}", String::from_utf8_lossy(&out.stderr));
    Instance::from_json(std::str::from_utf8(&out.stdout).unwrap(), &tol()).unwrap()
}

fn graph_matches(c: &mut Check, g: &GridGraph, label: &str) {
    let dp = solve_graph_smt_interval(g, 4).unwrap().length;
    let bf = graph_steiner_brute_force(g).unwrap().length;
    c.expect(rel(dp, bf) <= 1e-9, || format!("{label}: interval DP {dp} vs brute force {bf}"));
}

fn fptas_guarantee(c: &mut Check) {
    let corpus = fptas_corpus();
    c.expect(corpus.len() == 30, || format!("corpus has {} instances", corpus.len()));
    let mut graph_tests = 0;
    for (h, f, eps, seed) in corpus {
        let inst = gen_almost_convex(h, f, seed);
        let label = format!("hull {h} interior {f} eps {eps} seed {seed}");
        c.expect(inst.len() <= 8, || format!("{label}: too many terminals"));
        let exact = solve_exact(&inst, &tol()).unwrap().length;
        let sol = match solve_fptas(&inst, eps, FptasCaps::default(), &tol()) {
            Ok(s) => s,
            Err(e) => {
                c.failures.push(format!("{label}: {e}"));
                continue;
            }
        };
        let len = sol.tree.length;
        c.expect(len >= exact * (1.0 - 1e-9) && len <= (1.0 + eps) * exact, || {
            format!("{label}: fptas {len} exact {exact}")
        });
        c.expect(interval_property_holds(&sol.tree, &tol()).unwrap(), || format!("{label}: interval property"));
        c.expect(crossing_edges(&sol.tree, &tol()).is_empty(), || format!("{label}: crossing edges"));
        // Coarse grids small enough for the graph oracle.
        for coarse in [8.0, 16.0, 40.0] {
            if let Ok(g) = build_grid_graph(&inst, coarse, 12, &tol()) {
                if g.n_terminals() <= 5 {
                    graph_matches(c, &g, &format!("{label} coarse {coarse}"));
                    graph_tests += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for i in 0..40 {
        let nt = rng.random_range(2..=5);
        let nv = rng.random_range(nt..=12);
        let v: Vec<Point> = (0..nv).map(|_| Point::new(rng.random(), rng.random())).collect();
        let g = GridGraph::from_vertices(v, nt, &tol()).unwrap();
        graph_matches(c, &g, &format!("random graph #{i}"));
        graph_tests += 1;
    }
    c.expect(graph_tests >= 40, || format!("only {graph_tests} graph sub-tests"));
}

fn same_run(c: &mut Check, dir: &Path, label: &str, args: &[&str], files: &[&str]) {
    let mut seen = Vec::new();
    for round in 0..2 {
        let out = run(args);
        c.expect(out.status.success(), || format!("{label}: exit {:?}", out.status.code()));
        let mut bytes = out.stdout;
        for f in files {
            bytes.extend(std::fs::read(dir.join(f)).unwrap_or_default());
            let _ = std::fs::rename(dir.join(f), dir.join(format!("{f}.{round}")));
        }
        seen.push(bytes);
    }
    c.expect(seen[0] == seen[1] && !seen[0].is_empty(), || format!("{label}: outputs differ between runs"));
}

fn determinism(c: &mut Check) {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = |f: &str| d.join(f).to_str().unwrap().to_string();
    let square = Instance::new(
        "unit-square",
        vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)],
        &tol(),
    )
    .unwrap();
    std::fs::write(d.join("square.json"), square.to_json()).unwrap();
    std::fs::write(d.join("ac.json"), gen_almost_convex(5, 2, 7).to_json()).unwrap();
    let cpr = |n: &str, l: &str, f: &str| run(&["gen", "cpr", "--n", n, "--lambda", l, "--out", &p(f)]);
    for (n, l, f) in [("3", "2", "c3.json"), ("4", "10", "c4.json"), ("13", "30", "c13.json")] {
        c.expect(cpr(n, l, f).status.success(), || format!("gen cpr {n} {l}"));
    }
    let cases: Vec<(&str, Vec<String>, Vec<&str>)> = vec![
        ("gen cpr", vec!["gen".into(), "cpr".into(), "--n".into(), "20".into(), "--lambda".into(), "5".into()], vec![]),
        ("gen almost-convex", vec!["gen".into(), "almost-convex".into(), "--hull".into(), "6".into(), "--interior".into(), "2".into(), "--seed".into(), "7".into()], vec![]),
        ("solve exact", vec!["solve".into(), "--method".into(), "exact".into(), p("square.json"), "--svg".into(), p("s.svg")], vec!["s.svg"]),
        ("solve exact cpr-4", vec!["solve".into(), "--method".into(), "exact".into(), p("c4.json")], vec![]),
        ("solve cpr 3", vec!["solve".into(), "--method".into(), "cpr".into(), p("c3.json")], vec![]),
        ("solve cpr 13", vec!["solve".into(), "--method".into(), "cpr".into(), p("c13.json"), "--svg".into(), p("c.svg")], vec!["c.svg"]),
        ("solve fptas", vec!["solve".into(), "--method".into(), "fptas".into(), "--eps".into(), "1".into(), p("ac.json")], vec![]),
        ("solve mst", vec!["solve".into(), "--method".into(), "mst".into(), p("ac.json")], vec![]),
        ("bench thresholds", vec!["bench".into(), "thresholds".into(), "--csv".into(), p("t.csv")], vec!["t.csv"]),
    ];
    for (label, args, files) in &cases {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        same_run(c, d, label, &args, files);
    }
    let out = run(&["solve", "--method", "exact", &p("square.json"), "--out", &p("sq-tree.json")]);
    c.expect(out.status.success(), || "solve to file".into());
    same_run(c, d, "check", &["check", &p("sq-tree.json"), &p("square.json"), "--oracle"], &[]);

    // Library paths too, in process.
    let inst = gen_almost_convex(4, 1, 3);
    let a = solve_fptas(&inst, 1.0, FptasCaps::default(), &tol()).unwrap().tree.to_json();
    let b = solve_fptas(&inst, 1.0, FptasCaps::default(), &tol()).unwrap().tree.to_json();
    c.expect(a == b, || "solve_fptas differs between runs".into());
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let r = random_instance(&mut rng, 6);
    let e1 = solve_exact(&r, &tol()).unwrap().to_json();
    let e2 = solve_exact(&r, &tol()).unwrap().to_json();
    let b1 = brute_force(&r).unwrap().to_json();
    let b2 = brute_force(&r).unwrap().to_json();
    c.expect(e1 == e2 && b1 == b2, || "exact or brute force differs between runs".into());
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let results = [
        report(1, "lambda_1 table to 4 decimals", Duration::from_millis(1), lambda_table),
        report(2, "unit square agrees across four solvers", s(1), unit_square),
        report(3, "3-gon CPR equals sqrt3 lambda and exact", s(10), three_gon),
        report(4, "square topologies cross at 18.972", s(120), square_crossover_check),
        report(5, "singly connected closed form", s(60), singly_connected),
        report(6, "vertical fork construction", s(1), vertical_fork),
        report(7, "exact matches brute force on 200 instances", s(300), exact_vs_oracle),
        report(8, "full topology enumeration", s(10), topology_enumeration),
        report(9, "FPTAS within (1 + eps) of exact", s(600), fptas_guarantee),
        report(10, "byte-identical reruns", s(600), determinism),
    ];
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, ok)| !**ok).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
