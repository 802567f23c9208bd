//! The elementary minimum-cost path problem with a length constraint
//! (chain pricing), its exact solver and the local-search heuristic.

mod exact;
mod io;
mod local_search;

use serde::{Deserialize, Serialize};

use crate::graph::PricingGraph;

pub use exact::{solve_exact, ExactConfig};
pub use io::{
    empplc_from_json, empplc_from_json_with_duals, empplc_to_json, empplc_to_json_with_duals,
    estimate_duals, load_empplc, load_empplc_with_duals, save_empplc, save_empplc_with_duals,
};
pub use local_search::{solve_local_search, LocalSearchConfig, LocalSearchOutcome};

/// Costs below `-NEGATIVE_TOL` count as negative when classifying signs.
pub const NEGATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Target {
    BestOverall,
    FirstNegative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionKind {
    Exact,
    Heuristic,
    RelaxationBound,
}

/// A chain-pricing instance: a preprocessed pricing graph plus what to look for.
#[derive(Debug, Clone)]
pub struct EmpplcInstance {
    pub graph: PricingGraph,
    pub target: Target,
}

impl EmpplcInstance {
    pub fn new(graph: PricingGraph) -> Self {
        Self {
            graph,
            target: Target::BestOverall,
        }
    }

    pub fn max_len(&self) -> usize {
        self.graph.max_len()
    }
}

/// A path `(s, path...)` and its cost. The source is implicit: `path` lists
/// only real vertices. A missing path means none was found; `cost` is then 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpplcSolution {
    pub path: Option<Vec<usize>>,
    pub cost: f64,
    pub is_proven_optimal: bool,
    pub kind: SolutionKind,
}

impl EmpplcSolution {
    pub fn no_path(kind: SolutionKind, is_proven_optimal: bool) -> Self {
        Self {
            path: None,
            cost: 0.0,
            is_proven_optimal,
            kind,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.cost < -NEGATIVE_TOL
    }

    /// The path is elementary, within the length limit, and its stored cost
    /// matches the arc sum.
    pub fn is_consistent(&self, g: &PricingGraph) -> bool {
        match &self.path {
            None => true,
            Some(p) => {
                g.is_valid_path(p)
                    && g
                        .path_cost(p)
                        .is_some_and(|c| (c - self.cost).abs() <= 1e-12 * (1.0 + c.abs()))
            }
        }
    }
}

/// `-1`, `0` or `1` with the shared tolerance; used for sign comparisons.
pub fn cost_sign(cost: f64) -> i8 {
    if cost < -NEGATIVE_TOL {
        -1
    } else if cost > NEGATIVE_TOL {
        1
    } else {
        0
    }
}

