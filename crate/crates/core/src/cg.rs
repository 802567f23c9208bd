//! Column generation over chains: cycles are enumerated up front, chains are
//! priced by color coding with an ng-route fallback that also certifies the
//! end of the loop, and a restricted integer program finishes the solve.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::color_coding::{
    build_arrangement, color_vertices, solve_color_coding, Arrangement, ArrangementConfig,
    ColorfulDp, ColoringPlan, ColoringStrategy, MAX_COLORS,
};
use crate::error::{KepError, Result};
use crate::exchange::{enumerate_cycles, Exchange};
use crate::graph::{build_pricing_graph, preprocess, DualVector, PricingGraph};
use crate::instance::{CompatibilityInstance, KepSolution, SolveStatus, VertexId};
use crate::master::{add_column, lagrangian_ub, solve_restricted_ip, solve_rmp, RestrictedMaster};
use crate::ng::{solve_ng_dssr, DssrMode, NgConfig, NgOutcome, MAX_MEMORY};
use crate::pricing::{EmpplcInstance, Target};

/// Pricing paths must beat this to count as improving (reduced cost above it).
pub const RC_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct CgConfig {
    /// Color-coding budget per iteration; `None` relies on the trial cap.
    pub cc_time_limit: Option<Duration>,
    /// Extra cap on color-coding trials per iteration.
    pub cc_trial_cap: Option<u64>,
    /// Stop color coding at the first trial that yields an improving chain.
    pub cc_stop_on_negative: bool,
    pub use_color_coding: bool,
    /// Number of colors; `None` means `L + 1`.
    pub colors: Option<usize>,
    pub rho: f64,
    pub coloring: ColoringStrategy,
    pub seed: u64,
    pub ng: NgConfig,
    pub arrangement: ArrangementConfig,
    pub total_time_limit: Option<Duration>,
    pub ip_time_limit: Option<Duration>,
    pub subpath_expansion: bool,
    pub max_iterations: usize,
    /// Keep the duals of every iteration in the trace.
    pub record_duals: bool,
    /// Extra near-zero reduced-cost chains collected before the final IP
    /// when the last LP solution is fractional.
    pub harvest: Option<HarvestConfig>,
}

/// Before the final IP, color-coding DP tables at the final duals are
/// scanned for chains with reduced cost at least `-slack`. Only such
/// columns can appear in an integer solution that matches the LP value.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestConfig {
    pub trials: u64,
    pub max_columns: usize,
    pub slack: f64,
}

impl Default for HarvestConfig {
    fn default() -> Self {
        Self {
            trials: 32,
            max_columns: 5_000,
            slack: 1e-6,
        }
    }
}

impl Default for CgConfig {
    fn default() -> Self {
        Self {
            cc_time_limit: Some(Duration::from_secs(1)),
            cc_trial_cap: None,
            cc_stop_on_negative: true,
            use_color_coding: true,
            colors: None,
            rho: 0.99,
            coloring: ColoringStrategy::PermInterval,
            seed: 0,
            ng: NgConfig::default(),
            arrangement: ArrangementConfig::default(),
            total_time_limit: Some(Duration::from_secs(600)),
            ip_time_limit: Some(Duration::from_secs(60)),
            subpath_expansion: true,
            max_iterations: 100_000,
            record_duals: false,
            harvest: Some(HarvestConfig::default()),
        }
    }
}

impl CgConfig {
    /// Settings whose outcome does not depend on wall-clock time: color
    /// coding and the arrangement search are bounded by counts only.
    pub fn deterministic(seed: u64) -> Self {
        Self {
            cc_time_limit: None,
            cc_trial_cap: Some(16),
            seed,
            arrangement: ArrangementConfig {
                max_evaluations: 200_000,
                time_limit: None,
                stagnation: 20_000,
                seed,
            },
            total_time_limit: None,
            ip_time_limit: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |d: Option<Duration>, name: &str| match d {
            Some(d) if d.is_zero() => Err(KepError::Parameter(format!("{name} must be positive"))),
            _ => Ok(()),
        };
        positive(self.cc_time_limit, "color-coding time limit")?;
        positive(self.total_time_limit, "total time limit")?;
        positive(self.ip_time_limit, "IP time limit")?;
        if self.cc_trial_cap == Some(0) {
            return Err(KepError::Parameter("trial cap must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(KepError::Parameter("max_iterations must be positive".into()));
        }
        if let Some(c) = self.colors {
            if c < 2 {
                return Err(KepError::Parameter(format!("need at least 2 colors, got {c}")));
            }
        }
        self.ng.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PricingAlgo {
    ColorCoding,
    NgRoute,
    /// No altruists: nothing to price.
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgIteration {
    pub iteration: usize,
    pub rmp_value: f64,
    /// Algorithm that produced the iteration's decision.
    pub algo: PricingAlgo,
    /// Largest reduced cost found (`-` pricing cost); for ng this is the
    /// relaxation bound, an upper bound on every chain's reduced cost.
    pub best_rc: f64,
    pub columns_added: usize,
    pub cc_trials: u64,
    pub ng_elementary: Option<bool>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CgTrace {
    pub iterations: Vec<CgIteration>,
    pub ng_calls: usize,
    pub cc_calls: usize,
    pub num_cycles: usize,
    pub num_columns: usize,
    pub ip_nodes: u64,
    /// Columns added by the pre-IP harvest.
    pub harvested: usize,
    pub final_status: Option<SolveStatus>,
    /// Notable events, e.g. DSSR limit escalations.
    pub events: Vec<String>,
    #[serde(skip)]
    pub duals: Vec<DualVector>,
}

enum Ending {
    Certified,
    Stuck { bound: f64 },
    TimeLimit,
}

fn chain_from_path(inst: &CompatibilityInstance, path: &[usize]) -> Result<Exchange> {
    let vs: Vec<VertexId> = path.iter().map(|&v| VertexId::from(v)).collect();
    Exchange::chain(inst, &vs)
}

/// Adds the elementary prefix of an ng walk when it (or, with expansion, one
/// of its own prefixes) improves. Returns the number of columns added.
fn add_from_walk(
    master: &mut RestrictedMaster,
    inst: &CompatibilityInstance,
    g: &PricingGraph,
    walk: &[usize],
    expand: bool,
) -> Result<usize> {
    let mut seen = vec![false; g.num_vertices()];
    let mut prefix = Vec::new();
    for &v in walk {
        if seen[v] {
            break;
        }
        seen[v] = true;
        prefix.push(v);
    }
    // Cheapest prefix with at least one compatibility arc.
    let mut best: Option<(f64, usize)> = None;
    let mut c = 0.0;
    let mut prev = g.source();
    for (k, &v) in prefix.iter().enumerate() {
        c += g.cost(prev, v).expect("walk follows arcs");
        prev = v;
        if k >= 1 && c < -RC_TOL && best.map_or(true, |(b, _)| c < b) {
            best = Some((c, k + 1));
        }
    }
    let Some((_, len)) = best else {
        return Ok(0);
    };
    let take = if expand { prefix.len() } else { len };
    let e = chain_from_path(inst, &prefix[..take])?;
    add_column(master, inst, e, expand)
}

fn harvest(
    master: &mut RestrictedMaster,
    inst: &CompatibilityInstance,
    g: &PricingGraph,
    arr: &Arrangement,
    colors: usize,
    seed: u64,
    hc: &HarvestConfig,
) -> Result<usize> {
    let mut dp = ColorfulDp::new(g, colors)?;
    let plan = ColoringPlan::new(ColoringStrategy::PermInterval, colors, seed);
    let per_trial = (hc.max_columns as u64).div_ceil(hc.trials.max(1)) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut added = 0;
    for t in 0..hc.trials {
        let coloring = color_vertices(&plan, arr, t);
        dp.solve(g, &coloring);
        let mut found = dp.paths_below(&coloring, hc.slack, 2, usize::MAX);
        found.shuffle(&mut rng);
        let mut taken = 0;
        for (_, path) in found {
            if taken >= per_trial {
                break;
            }
            if master.insert(chain_from_path(inst, &path)?) {
                added += 1;
                taken += 1;
                if added >= hc.max_columns {
                    return Ok(added);
                }
            }
        }
    }
    Ok(added)
}

fn escalate(cfg: &NgConfig) -> Option<NgConfig> {
    if cfg.mode != DssrMode::Limited {
        return None;
    }
    let cur = cfg.effective_size_limit();
    if cur >= MAX_MEMORY - 1 {
        return None;
    }
    Some(NgConfig {
        size_limit: Some((cur * 2).min(MAX_MEMORY - 1)),
        ..cfg.clone()
    })
}

/// Runs column generation and the final restricted IP.
pub fn solve_kep(inst: &CompatibilityInstance, cfg: &CgConfig) -> Result<(KepSolution, CgTrace)> {
    cfg.validate()?;
    let start = Instant::now();
    let n = inst.num_vertices();
    let mut timings = BTreeMap::new();
    let mut trace = CgTrace::default();

    let mut master = RestrictedMaster::new(n);
    let cycles = enumerate_cycles(inst)?;
    trace.num_cycles = cycles.len();
    for c in cycles {
        master.insert(c);
    }
    timings.insert("enumerate".to_string(), start.elapsed().as_secs_f64());

    let mut pricing = None;
    let mut arrangement = None;
    let mut colors = cfg.colors.unwrap_or(inst.max_chain() + 1);
    if inst.num_altruists() > 0 {
        let t = Instant::now();
        let g = preprocess(&build_pricing_graph(inst, &DualVector::zeros(n))?);
        if cfg.use_color_coding && colors <= MAX_COLORS {
            let mut acfg = cfg.arrangement.clone();
            acfg.seed = cfg.seed;
            arrangement = Some(build_arrangement(&g, &acfg));
        } else if cfg.use_color_coding {
            trace
                .events
                .push(format!("color coding disabled: {colors} colors exceed {MAX_COLORS}"));
        }
        timings.insert("arrangement".to_string(), t.elapsed().as_secs_f64());
        let mut p = EmpplcInstance::new(g);
        if cfg.cc_stop_on_negative {
            p.target = Target::FirstNegative;
        }
        pricing = Some(p);
    }
    colors = colors.max(2);

    let mut ending = Ending::Certified;
    let mut cc_time = 0.0;
    let mut ng_time = 0.0;
    let mut lp_time = 0.0;
    let mut iteration = 0usize;
    loop {
        iteration += 1;
        let t = Instant::now();
        let lp = solve_rmp(&mut master)?;
        lp_time += t.elapsed().as_secs_f64();
        let Some(pinst) = pricing.as_mut() else {
            trace.iterations.push(CgIteration {
                iteration,
                rmp_value: lp.value,
                algo: PricingAlgo::None,
                best_rc: 0.0,
                columns_added: 0,
                cc_trials: 0,
                ng_elementary: None,
                elapsed_s: start.elapsed().as_secs_f64(),
            });
            break;
        };
        if cfg.record_duals {
            trace.duals.push(lp.duals.clone());
        }
        if cfg.total_time_limit.is_some_and(|tl| start.elapsed() >= tl)
            || iteration > cfg.max_iterations
        {
            ending = Ending::TimeLimit;
            break;
        }
        pinst.graph.reprice(inst, &lp.duals)?;
        let mut record = CgIteration {
            iteration,
            rmp_value: lp.value,
            algo: PricingAlgo::ColorCoding,
            best_rc: f64::NEG_INFINITY,
            columns_added: 0,
            cc_trials: 0,
            ng_elementary: None,
            elapsed_s: 0.0,
        };

        if let Some(arr) = arrangement.as_ref() {
            let t = Instant::now();
            let mut plan = ColoringPlan::new(cfg.coloring, colors, cfg.seed ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            plan.rho = cfg.rho;
            plan.trial_budget = cfg.cc_trial_cap;
            plan.shift_offset = iteration % arr.len().max(1);
            let out = solve_color_coding(pinst, &plan, arr, cfg.cc_time_limit)?;
            cc_time += t.elapsed().as_secs_f64();
            trace.cc_calls += 1;
            record.cc_trials = out.trials_run;
            record.best_rc = -out.best.cost;
            if let (true, Some(path)) = (out.best.cost < -RC_TOL, out.best.path.as_ref()) {
                let e = chain_from_path(inst, path)?;
                record.columns_added = add_column(&mut master, inst, e, cfg.subpath_expansion)?;
            }
            if record.columns_added > 0 {
                record.elapsed_s = start.elapsed().as_secs_f64();
                trace.iterations.push(record);
                continue;
            }
            if out.proven_optimal && out.best.cost >= -RC_TOL {
                record.elapsed_s = start.elapsed().as_secs_f64();
                trace.iterations.push(record);
                ending = Ending::Certified;
                break;
            }
        }

        record.algo = PricingAlgo::NgRoute;
        let mut ng_cfg = cfg.ng.clone();
        let t = Instant::now();
        let decision = loop {
            let out: NgOutcome = solve_ng_dssr(&pinst.graph, &lp.duals, &ng_cfg)?;
            trace.ng_calls += 1;
            record.best_rc = -out.solution.cost;
            record.ng_elementary = Some(out.elementary);
            if out.solution.cost >= -RC_TOL {
                break Some(Ending::Certified);
            }
            let walk = out.solution.path.as_ref().expect("negative bound has a path");
            let added = if out.elementary {
                let e = chain_from_path(inst, walk)?;
                add_column(&mut master, inst, e, cfg.subpath_expansion)?
            } else {
                add_from_walk(&mut master, inst, &pinst.graph, walk, cfg.subpath_expansion)?
            };
            if added > 0 {
                record.columns_added = added;
                break None;
            }
            match escalate(&ng_cfg) {
                Some(next) => {
                    trace.events.push(format!(
                        "iteration {iteration}: non-improving relaxed walk, memory limit raised to {}",
                        next.effective_size_limit()
                    ));
                    ng_cfg = next;
                }
                None => {
                    break Some(Ending::Stuck {
                        bound: out.solution.cost,
                    })
                }
            }
        };
        ng_time += t.elapsed().as_secs_f64();
        record.elapsed_s = start.elapsed().as_secs_f64();
        trace.iterations.push(record);
        if let Some(e) = decision {
            ending = e;
            break;
        }
    }

    let z_bar = master.lp_value();
    let (mut status, upper_bound) = match ending {
        Ending::Certified => (SolveStatus::OptimalLP, z_bar),
        Ending::Stuck { bound } => (SolveStatus::UpperBoundOnly, lagrangian_ub(z_bar, -bound, n)),
        Ending::TimeLimit => {
            let pinst = pricing.as_mut().expect("time limit only with pricing");
            let duals = master.duals().clone();
            pinst.graph.reprice(inst, &duals)?;
            let t = Instant::now();
            let out = solve_ng_dssr(&pinst.graph, &duals, &cfg.ng)?;
            ng_time += t.elapsed().as_secs_f64();
            trace.ng_calls += 1;
            (SolveStatus::TimeLimit, lagrangian_ub(z_bar, -out.solution.cost, n))
        }
    };
    timings.insert("lp".to_string(), lp_time);
    timings.insert("color_coding".to_string(), cc_time);
    timings.insert("ng".to_string(), ng_time);

    if let (Some(hc), Some(pinst), Some(arr)) = (&cfg.harvest, pricing.as_mut(), &arrangement) {
        if !master.is_integral() {
            let t = Instant::now();
            let duals = master.duals().clone();
            pinst.graph.reprice(inst, &duals)?;
            trace.harvested = harvest(&mut master, inst, &pinst.graph, arr, colors, cfg.seed, hc)?;
            timings.insert("harvest".to_string(), t.elapsed().as_secs_f64());
        }
    }

    let t = Instant::now();
    let ip = solve_restricted_ip(&master, cfg.ip_time_limit)?;
    timings.insert("ip".to_string(), t.elapsed().as_secs_f64());
    if ip.solution.status == SolveStatus::TimeLimit {
        status = SolveStatus::TimeLimit;
    }
    trace.ip_nodes = ip.nodes;
    trace.num_columns = master.num_columns();
    trace.final_status = Some(status);
    timings.insert("total".to_string(), start.elapsed().as_secs_f64());
    let sol = KepSolution::new(ip.solution.chosen, upper_bound.max(z_bar), status, timings)?;
    Ok((sol, trace))
}
