//! Benchmark matrix, pricing-instance extraction and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cg::{solve_kep, CgConfig, CgTrace};
use crate::error::{KepError, Result};
use crate::graph::{build_pricing_graph, preprocess, DualVector, PricingGraph};
use crate::instance::{generate, relative_gap, CompatibilityInstance, GeneratorParams, KepSolution};

/// Relative gaps at or below this count as closed.
pub const ZERO_GAP_TOL: f64 = 1e-6;

/// Pricing problem of one CG iteration.
#[derive(Debug, Clone)]
pub struct ExtractedInstance {
    /// `first`, `middle` or `last`.
    pub label: &'static str,
    /// 1-based CG iteration.
    pub iteration: usize,
    pub graph: PricingGraph,
    pub duals: DualVector,
}

/// Solves `inst` and rebuilds the pricing graphs of the first, middle and
/// last iterations (fewer when the run had fewer distinct iterations).
pub fn extract(
    inst: &CompatibilityInstance,
    cfg: &CgConfig,
) -> Result<(Vec<ExtractedInstance>, KepSolution, CgTrace)> {
    let mut cfg = cfg.clone();
    cfg.record_duals = true;
    let (sol, trace) = solve_kep(inst, &cfg)?;
    let k = trace.duals.len();
    let mut picks: Vec<(&'static str, usize)> = Vec::new();
    if k > 0 {
        for (label, idx) in [("first", 0), ("middle", k / 2), ("last", k - 1)] {
            if !picks.iter().any(|&(_, i)| i == idx) {
                picks.push((label, idx));
            }
        }
    }
    let mut out = Vec::new();
    for (label, idx) in picks {
        let duals = trace.duals[idx].clone();
        let graph = preprocess(&build_pricing_graph(inst, &duals)?);
        out.push(ExtractedInstance {
            label,
            iteration: idx + 1,
            graph,
            duals,
        });
    }
    Ok((out, sol, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub pairs: Vec<usize>,
    pub chain_limits: Vec<usize>,
    pub seeds: Vec<u64>,
    pub max_cycle: usize,
    pub altruist_fraction: f64,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            pairs: vec![50, 100],
            chain_limits: vec![4, 7, 13],
            seeds: (1..=5).collect(),
            max_cycle: 3,
            altruist_fraction: GeneratorParams::default().altruist_fraction,
        }
    }
}

impl BenchSpec {
    pub fn cases(&self) -> Vec<(usize, usize, u64)> {
        let mut v = Vec::new();
        for &p in &self.pairs {
            for &l in &self.chain_limits {
                for &s in &self.seeds {
                    v.push((p, l, s));
                }
            }
        }
        v
    }

    pub fn instance(&self, pairs: usize, l: usize, seed: u64) -> Result<CompatibilityInstance> {
        generate(&GeneratorParams {
            num_pairs: pairs,
            altruist_fraction: self.altruist_fraction,
            seed,
            max_cycle: self.max_cycle,
            max_chain: l,
            ..GeneratorParams::default()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub pairs: usize,
    pub altruists: usize,
    pub l: usize,
    pub seed: u64,
    pub lp_ub: f64,
    pub ip_lb: f64,
    pub gap: f64,
    pub runtime_s: f64,
    pub ng_calls: usize,
    pub iterations: usize,
    pub columns: usize,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchAggregates {
    pub instances: usize,
    pub mean_gap: f64,
    pub count_gap_zero: usize,
    pub mean_runtime_per_l: BTreeMap<usize, f64>,
    pub mean_ng_calls: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub aggregates: BenchAggregates,
}

impl BenchReport {
    /// Sorts rows by `(pairs, l, seed)` and computes the aggregates.
    pub fn from_rows(mut rows: Vec<BenchRow>) -> Self {
        rows.sort_by_key(|r| (r.pairs, r.l, r.seed));
        let n = rows.len();
        let mean = |f: &dyn Fn(&BenchRow) -> f64| {
            if n == 0 {
                0.0
            } else {
                rows.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let mut per_l: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for r in &rows {
            let e = per_l.entry(r.l).or_default();
            e.0 += r.runtime_s;
            e.1 += 1;
        }
        let aggregates = BenchAggregates {
            instances: n,
            mean_gap: mean(&|r| r.gap),
            count_gap_zero: rows.iter().filter(|r| r.gap <= ZERO_GAP_TOL).count(),
            mean_runtime_per_l: per_l.into_iter().map(|(l, (t, c))| (l, t / c as f64)).collect(),
            mean_ng_calls: mean(&|r| r.ng_calls as f64),
        };
        Self { rows, aggregates }
    }

    /// Zeroes every runtime so reruns compare byte for byte.
    pub fn without_timings(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|r| BenchRow {
                runtime_s: 0.0,
                ..r.clone()
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| KepError::parse("bench report", e.to_string()))
    }

    pub fn render_csv(&self) -> String {
        let mut s = String::from(
            "pairs,altruists,l,seed,lp_ub,ip_lb,gap,runtime_s,ng_calls,iterations,columns,status\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{:.6},{:.6},{:.6e},{:.3},{},{},{},{}",
                r.pairs,
                r.altruists,
                r.l,
                r.seed,
                r.lp_ub,
                r.ip_lb,
                r.gap,
                r.runtime_s,
                r.ng_calls,
                r.iterations,
                r.columns,
                r.status
            );
        }
        s
    }

    pub fn render_text(&self) -> String {
        let header = [
            "pairs", "alt", "L", "seed", "lp_ub", "ip_lb", "gap%", "time_s", "ng", "iters", "cols",
            "status",
        ];
        let mut table: Vec<Vec<String>> = vec![header.iter().map(|h| h.to_string()).collect()];
        for r in &self.rows {
            table.push(vec![
                r.pairs.to_string(),
                r.altruists.to_string(),
                r.l.to_string(),
                r.seed.to_string(),
                format!("{:.4}", r.lp_ub),
                format!("{:.4}", r.ip_lb),
                format!("{:.4}", 100.0 * r.gap),
                format!("{:.3}", r.runtime_s),
                r.ng_calls.to_string(),
                r.iterations.to_string(),
                r.columns.to_string(),
                r.status.clone(),
            ]);
        }
        let widths: Vec<usize> = (0..header.len())
            .map(|c| table.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        for row in &table {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .map(|(cell, &w)| format!("{cell:>w$}"))
                .collect();
            let _ = writeln!(s, "{}", line.join("  ").trim_end());
        }
        let a = &self.aggregates;
        let _ = writeln!(s);
        let _ = writeln!(s, "instances: {}", a.instances);
        let _ = writeln!(s, "mean gap: {:.4}%", 100.0 * a.mean_gap);
        let _ = writeln!(s, "gap = 0: {}/{}", a.count_gap_zero, a.instances);
        let _ = writeln!(s, "mean ng calls: {:.2}", a.mean_ng_calls);
        for (l, t) in &a.mean_runtime_per_l {
            let _ = writeln!(s, "mean runtime L={l}: {t:.3}s");
        }
        s
    }
}

/// Solves one bench case.
pub fn bench_case(spec: &BenchSpec, cfg: &CgConfig, pairs: usize, l: usize, seed: u64) -> Result<BenchRow> {
    let inst = spec.instance(pairs, l, seed)?;
    let mut cfg = cfg.clone();
    cfg.seed = seed;
    cfg.arrangement.seed = seed;
    let t = Instant::now();
    let (sol, trace) = solve_kep(&inst, &cfg)?;
    let runtime_s = t.elapsed().as_secs_f64();
    Ok(BenchRow {
        pairs,
        altruists: inst.num_altruists(),
        l,
        seed,
        lp_ub: sol.upper_bound,
        ip_lb: sol.objective,
        gap: relative_gap(sol.upper_bound, sol.objective),
        runtime_s,
        ng_calls: trace.ng_calls,
        iterations: trace.iterations.len(),
        columns: trace.num_columns,
        status: sol.status.to_string(),
    })
}

/// Worker count from `KEPCG_THREADS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var("KEPCG_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every case of `spec` on up to `threads` workers. Row order does not
/// depend on scheduling.
pub fn run_bench(spec: &BenchSpec, cfg: &CgConfig, threads: usize) -> Result<BenchReport> {
    let cases = spec.cases();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Result<BenchRow>>> = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..threads.max(1).min(cases.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(&(p, l, s)) = cases.get(i) else { break };
                let r = bench_case(spec, cfg, p, l, s);
                results.lock().expect("no poisoning").push(r);
            });
        }
    });
    let rows = results
        .into_inner()
        .expect("no poisoning")
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchReport::from_rows(rows))
}
