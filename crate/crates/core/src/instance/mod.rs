//! Compatibility graphs, the seeded pool generator, and file formats for
//! instances and solutions.

mod generate;
mod io;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{KepError, Result};
use crate::exchange::Exchange;

pub use generate::{generate, GeneratorParams, WeightMode};
pub use io::{
    instance_from_json, instance_to_json, load_instance, load_solution, save_instance,
    save_solution, solution_from_json, solution_to_json,
};

/// Dense vertex identifier. Ids run over `0..n` and their natural order is
/// the order used to canonicalize cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VertexId {
    fn from(v: usize) -> Self {
        VertexId(v as u32)
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A possible transplant: the donor of `from` can give to the patient of `to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatArc {
    pub from: VertexId,
    pub to: VertexId,
    pub weight: f64,
}

/// A kidney exchange pool: pairs, altruistic donors, weighted compatibility
/// arcs and the cycle/chain size limits.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityInstance {
    altruist: Vec<bool>,
    arcs: Vec<CompatArc>,
    /// Outgoing arcs per vertex, sorted by head.
    out: Vec<Vec<(VertexId, f64)>>,
    max_cycle: usize,
    max_chain: usize,
}

impl CompatibilityInstance {
    /// Builds and validates an instance. `altruist[v]` marks vertex `v` as an
    /// altruistic donor; every other vertex is a patient-donor pair.
    pub fn new(
        altruist: Vec<bool>,
        mut arcs: Vec<CompatArc>,
        max_cycle: usize,
        max_chain: usize,
    ) -> Result<Self> {
        let n = altruist.len();
        if max_cycle < 2 {
            return Err(KepError::Validation(format!("K must be >= 2, got {max_cycle}")));
        }
        if max_chain < 1 {
            return Err(KepError::Validation(format!("L must be >= 1, got {max_chain}")));
        }
        let mut out: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); n];
        for a in &arcs {
            let (u, v) = (a.from.index(), a.to.index());
            if u >= n || v >= n {
                return Err(KepError::Validation(format!(
                    "arc ({}, {}) references an unknown vertex",
                    a.from, a.to
                )));
            }
            if u == v {
                return Err(KepError::Validation(format!("self-loop on vertex {u}")));
            }
            if altruist[v] {
                return Err(KepError::Validation(format!(
                    "arc into altruist: ({}, {})",
                    a.from, a.to
                )));
            }
            if !(a.weight >= 0.0) || !a.weight.is_finite() {
                return Err(KepError::Validation(format!(
                    "arc ({}, {}) has invalid weight {}",
                    a.from, a.to, a.weight
                )));
            }
            out[u].push((a.to, a.weight));
        }
        for list in &mut out {
            list.sort_by_key(|&(v, _)| v);
            if list.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(KepError::Validation("duplicate arc".into()));
            }
        }
        arcs.sort_by_key(|a| (a.from, a.to));
        Ok(Self {
            altruist,
            arcs,
            out,
            max_cycle,
            max_chain,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.altruist.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.altruist.iter().filter(|&&a| !a).count()
    }

    pub fn num_altruists(&self) -> usize {
        self.altruist.iter().filter(|&&a| a).count()
    }

    pub fn is_altruist(&self, v: VertexId) -> bool {
        self.altruist[v.index()]
    }

    pub fn altruist_flags(&self) -> &[bool] {
        &self.altruist
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.altruist.len()).map(VertexId::from)
    }

    pub fn pairs(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| !self.is_altruist(v))
    }

    pub fn altruists(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_altruist(v))
    }

    /// Arcs sorted by `(from, to)`.
    pub fn arcs(&self) -> &[CompatArc] {
        &self.arcs
    }

    /// Outgoing arcs of `v` sorted by head.
    pub fn successors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.out[v.index()]
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> Option<f64> {
        let list = &self.out[u.index()];
        list.binary_search_by_key(&v, |&(h, _)| h)
            .ok()
            .map(|i| list[i].1)
    }

    /// Cycle size limit K.
    pub fn max_cycle(&self) -> usize {
        self.max_cycle
    }

    /// Chain length limit L (vertices in a chain, altruist included).
    pub fn max_chain(&self) -> usize {
        self.max_chain
    }

    /// Same graph with different limits.
    pub fn with_limits(&self, max_cycle: usize, max_chain: usize) -> Result<Self> {
        Self::new(self.altruist.clone(), self.arcs.clone(), max_cycle, max_chain)
    }

    pub fn mean_out_degree(&self) -> f64 {
        if self.altruist.is_empty() {
            return 0.0;
        }
        self.arcs.len() as f64 / self.altruist.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Pricing certified that the restricted master equals the full LP.
    OptimalLP,
    /// The reported upper bound is valid but the LP value was not certified.
    UpperBoundOnly,
    TimeLimit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::OptimalLP => "OptimalLP",
            SolveStatus::UpperBoundOnly => "UpperBoundOnly",
            SolveStatus::TimeLimit => "TimeLimit",
        };
        f.write_str(s)
    }
}

/// Smallest denominator used when computing relative gaps.
pub const GAP_EPS: f64 = 1e-9;

/// Relative gap `(ub - lb) / max(ub, eps)`.
pub fn relative_gap(upper_bound: f64, objective: f64) -> f64 {
    (upper_bound - objective) / upper_bound.max(GAP_EPS)
}

/// Final answer of a clearing run.
#[derive(Debug, Clone, PartialEq)]
pub struct KepSolution {
    pub chosen: Vec<Exchange>,
    pub objective: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub timings: BTreeMap<String, f64>,
}

impl KepSolution {
    /// Assembles a solution, computing the objective and gap. Fails if the
    /// exchanges overlap.
    pub fn new(
        chosen: Vec<Exchange>,
        upper_bound: f64,
        status: SolveStatus,
        timings: BTreeMap<String, f64>,
    ) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for e in &chosen {
            for v in e.vertices() {
                if !seen.insert(*v) {
                    return Err(KepError::Validation(format!(
                        "vertex {v} is covered by two chosen exchanges"
                    )));
                }
            }
        }
        let objective: f64 = chosen.iter().map(|e| e.weight()).sum();
        let gap = relative_gap(upper_bound, objective).max(0.0);
        Ok(Self {
            chosen,
            objective,
            upper_bound,
            gap,
            status,
            timings,
        })
    }
}

/// The worked example used throughout the tests: two altruists, five pairs,
/// eight arcs, K=3, L=4. Vertex labels 1..7 of the example map to ids 0..6.
pub fn fixture_g1() -> CompatibilityInstance {
    let label_arcs = [
        (1, 3),
        (2, 3),
        (3, 5),
        (5, 7),
        (7, 6),
        (6, 5),
        (4, 6),
        (6, 4),
    ];
    let arcs = label_arcs
        .iter()
        .map(|&(u, v)| CompatArc {
            from: VertexId(u - 1),
            to: VertexId(v - 1),
            weight: 1.0,
        })
        .collect();
    let altruist = (1..=7).map(|l| l <= 2).collect();
    CompatibilityInstance::new(altruist, arcs, 3, 4).expect("fixture is valid")
}
