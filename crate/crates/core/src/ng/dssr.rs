use serde::{Deserialize, Serialize};

use super::dp::{is_elementary, ng_dp, Direction, LabelMins, NgDpConfig};
use super::{build_ng_sets, NgConstruction, NgSets, DEFAULT_LAMBDA, MAX_MEMORY};
use crate::error::{KepError, Result};
use crate::graph::{DualVector, PricingGraph};
use crate::pricing::{EmpplcSolution, SolutionKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DssrMode {
    /// A single ng DP with the ng-sets as memories.
    None,
    /// Memories grow freely up to `size_limit` vertices each.
    Limited,
    /// Memories grow inside the ng-sets.
    Predefined,
    /// Memories grow without bound; for tests only.
    UnlimitedTestOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgConfig {
    pub mode: DssrMode,
    pub lambda: usize,
    pub construction: NgConstruction,
    pub seed: u64,
    /// Per-vertex memory cap in `Limited` mode; `None` means `lambda`.
    pub size_limit: Option<usize>,
    /// Prune with completion bounds from the previous DSSR iteration.
    pub filtering: bool,
    pub dominance: bool,
    pub max_iterations: usize,
    pub max_labels: usize,
}

impl Default for NgConfig {
    fn default() -> Self {
        Self {
            mode: DssrMode::Limited,
            lambda: DEFAULT_LAMBDA,
            construction: NgConstruction::DualGuidedNeighborhood,
            seed: 0,
            size_limit: None,
            filtering: true,
            dominance: true,
            max_iterations: 10_000,
            max_labels: 20_000_000,
        }
    }
}

impl NgConfig {
    pub fn effective_size_limit(&self) -> usize {
        self.size_limit.unwrap_or(self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == DssrMode::Limited && self.effective_size_limit() < 1 {
            return Err(KepError::Parameter(
                "limited DSSR needs a memory size limit of at least 1".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(KepError::Parameter("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Growing memories of the decremental relaxation.
#[derive(Debug, Clone, PartialEq)]
pub struct DssrState {
    pub mode: DssrMode,
    /// Memory of each vertex, without the vertex itself, sorted.
    pub mu: Vec<Vec<usize>>,
    pub iteration: usize,
    pub size_limit: Option<usize>,
}

impl DssrState {
    fn new(mode: DssrMode, n: usize, size_limit: Option<usize>) -> Self {
        Self {
            mode,
            mu: vec![Vec::new(); n],
            iteration: 0,
            size_limit,
        }
    }

    fn sets(&self) -> NgSets {
        NgSets::from_sets(self.mu.clone())
    }

    /// For each vertex repeated on `walk`, remembers it at every vertex
    /// strictly between two consecutive occurrences. Returns whether any
    /// memory grew.
    fn augment(&mut self, walk: &[usize], eta: &NgSets) -> bool {
        let mut grew = false;
        for (b, &v) in walk.iter().enumerate() {
            let Some(a) = walk[..b].iter().rposition(|&u| u == v) else {
                continue;
            };
            for &u in &walk[a + 1..b] {
                if u == v {
                    continue;
                }
                let allowed = match self.mode {
                    DssrMode::Predefined => eta.contains(u, v),
                    DssrMode::Limited => {
                        self.mu[u].len() < self.size_limit.unwrap_or(usize::MAX)
                    }
                    DssrMode::UnlimitedTestOnly => self.mu[u].len() + 1 < MAX_MEMORY,
                    DssrMode::None => false,
                };
                if let Err(pos) = self.mu[u].binary_search(&v) {
                    if allowed {
                        self.mu[u].insert(pos, v);
                        grew = true;
                    }
                }
            }
        }
        grew
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgOutcome {
    /// `kind` is `RelaxationBound`; `cost` is the bound.
    pub solution: EmpplcSolution,
    pub elementary: bool,
    pub iterations: usize,
    /// Bound after each DSSR iteration.
    pub bounds: Vec<f64>,
    pub state: DssrState,
}

/// ng-route relaxation with decremental state-space relaxation. Iterations
/// alternate forward and backward DPs; with filtering on, each uses the
/// label minima of the previous one as completion bounds.
pub fn solve_ng_dssr(g: &PricingGraph, duals: &DualVector, cfg: &NgConfig) -> Result<NgOutcome> {
    cfg.validate()?;
    let n = g.num_vertices();
    let eta = build_ng_sets(g, duals, cfg.lambda as i64, cfg.construction, cfg.seed)?;
    let limit = match cfg.mode {
        DssrMode::Limited => Some(cfg.effective_size_limit()),
        _ => None,
    };
    let mut state = DssrState::new(cfg.mode, n, limit);
    let mut prev: Option<LabelMins> = None;
    let mut bounds = Vec::new();
    let mut dir = Direction::Forward;
    loop {
        let sets = if cfg.mode == DssrMode::None {
            eta.clone()
        } else {
            state.sets()
        };
        let dp_cfg = NgDpConfig {
            direction: dir,
            dominance: cfg.dominance,
            max_labels: cfg.max_labels,
        };
        let completion = if cfg.filtering { prev.as_ref() } else { None };
        let r = ng_dp(g, &sets, completion, &dp_cfg)?;
        state.iteration += 1;
        bounds.push(r.bound);
        let done = match &r.path {
            None => true,
            Some(p) if r.elementary => {
                debug_assert!(is_elementary(p));
                true
            }
            Some(p) => {
                cfg.mode == DssrMode::None
                    || state.iteration >= cfg.max_iterations
                    || !state.augment(p, &eta)
            }
        };
        if done {
            return Ok(NgOutcome {
                solution: EmpplcSolution {
                    path: r.path,
                    cost: r.bound,
                    is_proven_optimal: r.elementary,
                    kind: SolutionKind::RelaxationBound,
                },
                elementary: r.elementary,
                iterations: state.iteration,
                bounds,
                state,
            });
        }
        prev = Some(r.label_mins);
        dir = dir.opposite();
    }
}
