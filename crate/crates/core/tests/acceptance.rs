//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are shown.

mod common;

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use kepcg::cg::{solve_kep, CgConfig, CgTrace};
use kepcg::color_coding::{
    build_arrangement, color_vertices, solve_color_coding, trial_count, Arrangement,
    ArrangementConfig, ColoringPlan, ColoringStrategy,
};
use kepcg::exchange::{enumerate_exchanges, reduced_cost, Exchange, ExchangeKind};
use kepcg::graph::{preprocess, DualVector, PricingGraph};
use kepcg::harness::{extract, run_bench, worker_count, BenchReport, BenchSpec};
use kepcg::instance::{fixture_g1, generate, CompatibilityInstance, GeneratorParams, SolveStatus};
use kepcg::master::lagrangian_ub;
use kepcg::ng::{ng_dp, solve_ng_dssr, Direction, NgConfig, NgDpConfig, NgSets};
use kepcg::pricing::{solve_exact, EmpplcInstance, ExactConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{all_paths, brute_min, exhaustive_packing, random_pricing_graph, rational_packing_lp, to_f64};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(id: u32, name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    let secs = t.elapsed().as_secs_f64();
    let (tag, detail, ok) = match res {
        Ok(d) => ("PASS", d, true),
        Err(d) => ("FAIL", d, false),
    };
    println!("criterion {id:>2} {tag}: {name}: {detail} [{secs:.2}s]");
    ok
}

fn oracle_cost(g: &PricingGraph) -> f64 {
    brute_min(g).map_or(0.0, |(c, _)| c)
}

fn small_arrangement(g: &PricingGraph, seed: u64) -> Arrangement {
    build_arrangement(
        g,
        &ArrangementConfig {
            max_evaluations: 20_000,
            time_limit: None,
            stagnation: 2_000,
            seed,
        },
    )
}

fn c1_fixture() -> Outcome {
    let inst = fixture_g1();
    let t = Instant::now();
    let all = enumerate_exchanges(&inst, 10_000).map_err(|e| e.to_string())?;
    let elapsed = t.elapsed();
    let got: BTreeSet<(bool, Vec<u32>)> = all
        .iter()
        .map(|e| (e.kind() == ExchangeKind::Cycle, e.vertices().iter().map(|v| v.0).collect()))
        .collect();
    let cycle = |v: &[u32]| (true, v.to_vec());
    let chain = |v: &[u32]| (false, v.to_vec());
    let expected: BTreeSet<(bool, Vec<u32>)> = [
        cycle(&[3, 5]),
        cycle(&[4, 6, 5]),
        chain(&[0, 2]),
        chain(&[0, 2, 4]),
        chain(&[0, 2, 4, 6]),
        chain(&[1, 2]),
        chain(&[1, 2, 4]),
        chain(&[1, 2, 4, 6]),
    ]
    .into_iter()
    .collect();
    check(
        all.len() == 8 && got == expected && elapsed < Duration::from_millis(10),
        format!("{} exchanges in {:.3} ms", all.len(), elapsed.as_secs_f64() * 1e3),
    )
}

fn c2_oracle_suite() -> Outcome {
    let t = Instant::now();
    let mut violations = Vec::new();
    let mut elementary_hits = 0;
    let count = 200u64;
    for seed in 0..count {
        let g = preprocess(&random_pricing_graph(seed, 20, 7));
        let n = g.num_vertices();
        let oracle = oracle_cost(&g);
        let exact = solve_exact(&EmpplcInstance::new(g.clone()), &ExactConfig::default())
            .map_err(|e| e.to_string())?;
        if exact.cost != oracle {
            violations.push(format!("seed {seed}: solve_exact {} vs {oracle}", exact.cost));
        }
        // (a) full memory turns ng-paths into elementary paths.
        for dir in [Direction::Forward, Direction::Backward] {
            let cfg = NgDpConfig {
                direction: dir,
                ..NgDpConfig::default()
            };
            let r = ng_dp(&g, &NgSets::full(n), None, &cfg).map_err(|e| e.to_string())?;
            if r.bound != oracle {
                violations.push(format!("seed {seed}: full-memory {dir:?} {} vs {oracle}", r.bound));
            }
        }
        // (b) limited DSSR is a lower bound, tight when elementary.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xD0A1);
        let duals = DualVector::new((0..n).map(|_| rng.gen_range(0..=3) as f64).collect());
        let ng = solve_ng_dssr(&g, &duals, &NgConfig::default()).map_err(|e| e.to_string())?;
        if ng.solution.cost > oracle + 1e-9 {
            violations.push(format!("seed {seed}: ng bound {} above {oracle}", ng.solution.cost));
        }
        if ng.elementary && ng.solution.path.is_some() {
            elementary_hits += 1;
            if (ng.solution.cost - oracle).abs() > 1e-9 {
                violations.push(format!("seed {seed}: elementary ng {} vs {oracle}", ng.solution.cost));
            }
        }
        // (c) color coding returns real paths, never better than optimal.
        let arr = small_arrangement(&g, seed);
        let mut plan = ColoringPlan::new(ColoringStrategy::PermInterval, g.max_len() + 1, seed);
        plan.trial_budget = Some(50);
        let cc = solve_color_coding(&EmpplcInstance::new(g.clone()), &plan, &arr, None)
            .map_err(|e| e.to_string())?;
        if !cc.best.is_consistent(&g) || (cc.best.path.is_some() && cc.best.cost < oracle - 1e-9) {
            violations.push(format!("seed {seed}: color coding {} vs {oracle}", cc.best.cost));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        violations.is_empty() && secs < 60.0,
        format!(
            "{count} instances, {} violations, {elementary_hits} elementary ng results{}",
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
    )
}

/// Disjoint clusters of `m` vertices with arcs only inside a cluster and a
/// path limit of `m - 1`; ids are shuffled so the arrangement has to find
/// the clusters.
fn clustered_graph(seed: u64) -> (PricingGraph, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(4..=6);
    let k = rng.gen_range(2..=4);
    let n = m * k;
    let mut ids: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(ids.as_mut_slice(), &mut rng);
    let mut source = Vec::new();
    let mut arcs = Vec::new();
    for c in 0..k {
        let members = &ids[c * m..(c + 1) * m];
        source.push((members[0], rng.gen_range(0..=2) as f64));
        for &u in members {
            for &v in members {
                if u != v && v != members[0] && rng.gen_bool(0.5) {
                    arcs.push((u, v, rng.gen_range(-3..=2) as f64));
                }
            }
        }
    }
    let g = PricingGraph::from_arcs(n, &source, &arcs, m - 1).unwrap();
    (preprocess(&g), m)
}

fn c3_guarantee() -> Outcome {
    let mut good = 0;
    let mut notes = Vec::new();
    for seed in 0..50u64 {
        let (g, colors) = clustered_graph(seed);
        let arr = build_arrangement(
            &g,
            &ArrangementConfig {
                max_evaluations: 200_000,
                time_limit: None,
                stagnation: 20_000,
                seed,
            },
        );
        let plan = ColoringPlan::new(ColoringStrategy::PermInterval, colors, seed);
        let out = solve_color_coding(&EmpplcInstance::new(g.clone()), &plan, &arr, None)
            .map_err(|e| e.to_string())?;
        let oracle = brute_min(&g);
        let matches = match &oracle {
            Some((c, _)) => out.best.path.is_some() && out.best.cost == *c,
            None => out.best.path.is_none(),
        };
        if arr.delta_max() < colors as u64
            && out.proven_optimal
            && out.trials_run == colors as u64
            && matches
        {
            good += 1;
        } else if notes.is_empty() {
            notes.push(format!(
                "seed {seed}: delta_max {} C {colors} trials {} proven {} cost {} oracle {:?}",
                arr.delta_max(),
                out.trials_run,
                out.proven_optimal,
                out.best.cost,
                oracle.map(|o| o.0)
            ));
        }
    }
    check(
        good == 50,
        format!("{good}/50 proven optimal in exactly C trials{}", notes.first().map(|n| format!(", {n}")).unwrap_or_default()),
    )
}

fn c4_trial_count() -> Outcome {
    let a = trial_count(0.99, 4);
    let b = trial_count(0.99, 2);
    check(a == 47 && b == 7, format!("trial_count(0.99,4)={a}, trial_count(0.99,2)={b}"))
}

fn c5_sign() -> Outcome {
    let spec = BenchSpec::default();
    let runs: [(usize, u64); 10] = [
        (4, 1),
        (4, 2),
        (4, 3),
        (7, 1),
        (7, 2),
        (7, 3),
        (7, 4),
        (13, 1),
        (13, 2),
        (13, 3),
    ];
    let oracle_cfg = ExactConfig {
        node_budget: 20_000_000,
        bound_pruning: true,
    };
    let (mut solvable, mut skipped, mut cc_good, mut ng_good) = (0, 0, 0, 0);
    let mut bad = Vec::new();
    for (l, seed) in runs {
        let inst = spec.instance(50, l, seed).map_err(|e| e.to_string())?;
        let (found, _, _) = extract(&inst, &CgConfig::deterministic(seed)).map_err(|e| e.to_string())?;
        for ex in found.iter().filter(|e| e.label != "last") {
            let pinst = EmpplcInstance::new(ex.graph.clone());
            let Ok(oracle) = solve_exact(&pinst, &oracle_cfg) else {
                skipped += 1;
                continue;
            };
            solvable += 1;
            let arr = build_arrangement(
                &ex.graph,
                &ArrangementConfig {
                    max_evaluations: 200_000,
                    time_limit: None,
                    stagnation: 20_000,
                    seed,
                },
            );
            let mut plan = ColoringPlan::new(ColoringStrategy::PermInterval, l + 1, seed);
            plan.trial_budget = Some(100);
            let cc = solve_color_coding(&pinst, &plan, &arr, None).map_err(|e| e.to_string())?;
            let ng = solve_ng_dssr(&ex.graph, &ex.duals, &NgConfig::default()).map_err(|e| e.to_string())?;
            let neg = oracle.is_negative();
            if cc.best.is_negative() == neg {
                cc_good += 1;
            } else {
                bad.push(format!("cc L={l} seed={seed} {}", ex.label));
            }
            if ng.solution.is_negative() == neg {
                ng_good += 1;
            } else {
                bad.push(format!("ng L={l} seed={seed} {}", ex.label));
            }
        }
    }
    check(
        solvable > 0 && cc_good == solvable && ng_good == solvable,
        format!(
            "color coding {cc_good}/{solvable}, ng {ng_good}/{solvable} good sign, {skipped} beyond oracle budget{}",
            bad.first().map(|b| format!(", first miss: {b}")).unwrap_or_default()
        ),
    )
}

/// Small generated pool with at most 20 vertices.
fn small_instance(seed: u64) -> CompatibilityInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    let pairs = rng.gen_range(8..=16);
    // K = 2 and sparse pools make fractional LPs (odd rings of 2-cycles) common.
    generate(&GeneratorParams {
        num_pairs: pairs,
        altruist_fraction: 0.2,
        seed,
        max_cycle: rng.gen_range(2..=3),
        max_chain: rng.gen_range(2..=5),
        crossmatch_failure: [0.6, 0.8, 0.95],
        ..GeneratorParams::default()
    })
    .unwrap()
}

struct SmallCase {
    inst: CompatibilityInstance,
    full: Vec<Exchange>,
    lp: f64,
    ip: f64,
}

fn small_case(seed: u64) -> SmallCase {
    let inst = small_instance(seed);
    let full = enumerate_exchanges(&inst, 1_000_000).unwrap();
    let cols: Vec<(Vec<usize>, i64)> = full
        .iter()
        .map(|e| {
            let w = e.weight();
            assert_eq!(w, w.round(), "unit weights expected");
            (e.vertices().iter().map(|v| v.index()).collect(), w as i64)
        })
        .collect();
    let lp = to_f64(&rational_packing_lp(inst.num_vertices(), &cols));
    let packing: Vec<(Vec<usize>, f64)> = cols.iter().map(|(v, w)| (v.clone(), *w as f64)).collect();
    let ip = exhaustive_packing(inst.num_vertices(), &packing);
    SmallCase { inst, full, lp, ip }
}

fn c6_cg_correctness(cases: &[SmallCase]) -> Outcome {
    let mut optimal = 0;
    let mut bad = Vec::new();
    let fractional = cases.iter().filter(|c| c.lp > c.ip + 1e-6).count();
    for (seed, c) in cases.iter().enumerate() {
        assert!(c.inst.num_vertices() <= 20);
        let (sol, _) = solve_kep(&c.inst, &CgConfig::deterministic(seed as u64)).map_err(|e| e.to_string())?;
        if sol.status == SolveStatus::OptimalLP {
            optimal += 1;
            if (sol.upper_bound - c.lp).abs() > 1e-6 || (sol.objective - c.ip).abs() > 1e-9 {
                bad.push(format!(
                    "seed {seed}: ub {} lp {} obj {} ip {}",
                    sol.upper_bound, c.lp, sol.objective, c.ip
                ));
            }
        }
    }
    check(
        bad.is_empty() && optimal > 0,
        format!(
            "{} instances ({fractional} with LP above IP), {optimal} OptimalLP, {} violations{}",
            cases.len(),
            bad.len(),
            bad.first().map(|b| format!(", first: {b}")).unwrap_or_default()
        ),
    )
}

fn c7_bench() -> (Outcome, Option<BenchReport>) {
    let t = Instant::now();
    let report = match run_bench(&BenchSpec::default(), &CgConfig::deterministic(0), worker_count()) {
        Ok(r) => r,
        Err(e) => return (Err(e.to_string()), None),
    };
    let secs = t.elapsed().as_secs_f64();
    let a = &report.aggregates;
    let ok = a.instances == 30
        && a.mean_gap <= 0.01
        && a.count_gap_zero * 10 >= a.instances * 8
        && secs < 1800.0;
    let detail = format!(
        "mean gap {:.4}%, {}/{} at gap 0, {secs:.1}s total",
        a.mean_gap * 100.0,
        a.count_gap_zero,
        a.instances
    );
    (check(ok, detail), Some(report))
}

fn c8_preprocessing() -> Outcome {
    let mut violations = 0usize;
    let mut paths = 0usize;
    for seed in 0..500u64 {
        let raw = random_pricing_graph(seed.wrapping_mul(7919) + 1, 25, 7);
        let pre = preprocess(&raw);
        for (_, p) in all_paths(&raw) {
            paths += 1;
            if !p.iter().all(|&v| pre.is_vertex_alive(v)) || !pre.is_valid_path(&p) {
                violations += 1;
            }
        }
    }
    check(violations == 0, format!("500 instances, {paths} valid paths, {violations} violations"))
}

fn c9_perm_stats() -> Outcome {
    let n = 30;
    let c = 5;
    let source: Vec<(usize, f64)> = (0..n).map(|v| (v, 0.0)).collect();
    let g = PricingGraph::from_arcs(n, &source, &[], 2).unwrap();
    let arr = Arrangement::identity(&g);
    let samples = 10_000u64;
    let mut within = 0usize;
    let mut cross_same = 0usize;
    for seed in 0..samples {
        let plan = ColoringPlan::new(ColoringStrategy::PermInterval, c, seed);
        let trial = seed % n as u64;
        let col = color_vertices(&plan, &arr, trial);
        let shift = trial as usize;
        // Position q belongs to interval ((q - shift) mod n) / C.
        let interval = |q: usize| ((q + n - shift) % n) / c;
        for a in 0..n {
            for b in a + 1..n {
                if interval(a) == interval(b) && col.color(arr.order()[a]) == col.color(arr.order()[b]) {
                    within += 1;
                }
            }
        }
        // Positions 0 and 15 are never in the same interval.
        if col.color(arr.order()[0]) == col.color(arr.order()[15]) {
            cross_same += 1;
        }
    }
    let p = 1.0 / c as f64;
    let mean = samples as f64 * p;
    let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
    let z = (cross_same as f64 - mean) / sigma;
    check(
        within == 0 && z.abs() <= 3.0,
        format!("{within} within-interval collisions, cross-interval same color {cross_same}/{samples} (z = {z:.2})"),
    )
}

fn c10_sandwich(report: Option<&BenchReport>, cases: &[SmallCase]) -> Outcome {
    let mut bad = Vec::new();
    let rows = report.map_or(0, |r| r.rows.len());
    if let Some(r) = report {
        for row in &r.rows {
            if row.ip_lb > row.lp_ub + 1e-6 {
                bad.push(format!("bench {}/{}/{}: ip {} > ub {}", row.pairs, row.l, row.seed, row.ip_lb, row.lp_ub));
            }
        }
    } else {
        bad.push("no bench report".into());
    }
    let mut checked = 0usize;
    for (seed, c) in cases.iter().enumerate() {
        let n = c.inst.num_vertices();
        // Every iteration's duals, and truncated runs that report the bound.
        let mut cfg = CgConfig::deterministic(seed as u64);
        cfg.record_duals = true;
        let (_, trace): (_, CgTrace) = solve_kep(&c.inst, &cfg).map_err(|e| e.to_string())?;
        for (it, duals) in trace.iterations.iter().zip(&trace.duals) {
            let max_rc = c.full.iter().map(|e| reduced_cost(e, duals)).fold(f64::NEG_INFINITY, f64::max);
            let ub = lagrangian_ub(it.rmp_value, max_rc, n);
            checked += 1;
            if ub < c.lp - 1e-9 {
                bad.push(format!("small {seed} iteration {}: {ub} < {}", it.iteration, c.lp));
            }
        }
        for cap in 1..=2 {
            let cfg = CgConfig {
                max_iterations: cap,
                ..CgConfig::deterministic(seed as u64)
            };
            let (sol, _) = solve_kep(&c.inst, &cfg).map_err(|e| e.to_string())?;
            checked += 1;
            if sol.upper_bound < c.lp - 1e-9 || sol.objective > c.ip + 1e-9 {
                bad.push(format!("small {seed} cap {cap}: ub {} lp {}", sol.upper_bound, c.lp));
            }
        }
    }
    check(
        bad.is_empty(),
        format!(
            "{rows} bench rows, {checked} Lagrangian checks, {} violations{}",
            bad.len(),
            bad.first().map(|b| format!(", first: {b}")).unwrap_or_default()
        ),
    )
}

fn main() {
    let mut ok = true;
    ok &= run(1, "fixture exchanges", c1_fixture);
    ok &= run(2, "pricing oracle equivalence", c2_oracle_suite);
    ok &= run(3, "window guarantee in C trials", c3_guarantee);
    ok &= run(4, "trial-count formula", c4_trial_count);
    ok &= run(5, "sign property on extracted instances", c5_sign);
    let cases: Vec<SmallCase> = (0..50).map(small_case).collect();
    ok &= run(6, "column generation vs full enumeration", || c6_cg_correctness(&cases));
    let mut report = None;
    ok &= run(7, "default bench gaps", || {
        let (o, r) = c7_bench();
        report = r;
        o
    });
    ok &= run(8, "preprocessing safety", c8_preprocessing);
    ok &= run(9, "interval coloring statistics", c9_perm_stats);
    ok &= run(10, "bound sandwich", || c10_sandwich(report.as_ref(), &cases));
    if !ok {
        std::process::exit(1);
    }
}
