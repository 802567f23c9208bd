//! Color coding for chain pricing: arrange vertices so extended neighbors sit
//! close together, color intervals of the arrangement with permutations, and
//! solve a colorful-path DP per coloring.

mod arrangement;
mod coloring;
mod dp;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::pricing::{EmpplcInstance, EmpplcSolution, SolutionKind, Target};

pub use arrangement::{build_arrangement, evaluate, Arrangement, ArrangementConfig};
pub use coloring::{color_vertices, Coloring, ColoringPlan, ColoringStrategy, MAX_COLORS};
pub use dp::{colorful_dp, ColorfulDp, MAX_DP_ENTRIES};

/// Trials needed so that a fixed path on `colors` vertices is colorful in at
/// least one uniform coloring with probability `rho`.
pub fn trial_count(rho: f64, colors: usize) -> u64 {
    assert!(rho > 0.0 && rho < 1.0, "rho must lie in (0, 1)");
    assert!(colors >= 2, "need at least 2 colors");
    // log(C!/C^C) = sum_{k=1}^{C} ln(k / C)
    let ln_p: f64 = (1..=colors).map(|k| (k as f64 / colors as f64).ln()).sum();
    let p = ln_p.exp();
    let t = (1.0 - rho).ln() / (-p).ln_1p();
    (t.ceil() as u64).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcOutcome {
    /// Best path of the earliest trial whose best path is negative.
    pub first_negative: Option<EmpplcSolution>,
    pub best: EmpplcSolution,
    pub trials_run: u64,
    pub proven_optimal: bool,
}

/// Whether `C` shifted interval colorings are guaranteed to make every
/// feasible path colorful once: all extended neighbors must be fewer than
/// `C` positions apart, so any path fits in a window of `C` positions.
pub fn has_window_guarantee(plan: &ColoringPlan, arr: &Arrangement) -> bool {
    plan.strategy == ColoringStrategy::PermInterval && arr.delta_max() < plan.colors as u64
}

/// Runs coloring trials until the window guarantee is met, the trial cap
/// (`min(trial_budget, trial_count)`) is reached, or the time limit expires.
/// The limit is only checked between trials. With
/// [`Target::FirstNegative`] the loop also stops at the first negative path.
pub fn solve_color_coding(
    inst: &EmpplcInstance,
    plan: &ColoringPlan,
    arr: &Arrangement,
    time_limit: Option<Duration>,
) -> Result<CcOutcome> {
    plan.validate()?;
    let g = &inst.graph;
    let start = Instant::now();
    let guarantee = has_window_guarantee(plan, arr);
    let mut plan = plan.clone();
    let n = arr.len().max(1);
    plan.shift_offset %= n;
    // The window argument needs the C shifts to align intervals with every
    // window start, which holds from offset 0 or when C divides n.
    if guarantee && n % plan.colors != 0 {
        plan.shift_offset = 0;
    }
    let cap = if guarantee {
        plan.colors as u64
    } else {
        let t = trial_count(plan.rho, plan.colors);
        plan.trial_budget.map_or(t, |b| b.min(t)).max(1)
    };
    let stop_on_negative = inst.target == Target::FirstNegative;

    let mut dp = ColorfulDp::new(g, plan.colors)?;
    let mut best: Option<EmpplcSolution> = None;
    let mut first_negative = None;
    let mut trials = 0u64;
    while trials < cap {
        if !guarantee && trials > 0 && time_limit.is_some_and(|t| start.elapsed() >= t) {
            break;
        }
        let coloring = color_vertices(&plan, arr, trials);
        let sol = dp.solve(g, &coloring);
        trials += 1;
        if first_negative.is_none() && sol.is_negative() {
            first_negative = Some(sol.clone());
        }
        if sol.path.is_some() && best.as_ref().map_or(true, |b| sol.cost < b.cost) {
            best = Some(sol);
        }
        if stop_on_negative && first_negative.is_some() {
            break;
        }
    }
    let proven_optimal = guarantee && trials == plan.colors as u64;
    let mut best = best.unwrap_or_else(|| EmpplcSolution::no_path(SolutionKind::Heuristic, false));
    if proven_optimal {
        best.is_proven_optimal = true;
        best.kind = SolutionKind::Exact;
    }
    Ok(CcOutcome {
        first_negative,
        best,
        trials_run: trials,
        proven_optimal,
    })
}
