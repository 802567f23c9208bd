//! ng-route relaxation of chain pricing. A relaxed path only remembers the
//! visited vertices kept by the ng-sets along the way, which gives a lower
//! bound on the elementary optimum; decremental state-space relaxation grows
//! the memories until the best relaxed path is elementary.

mod dp;
mod dssr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KepError, Result};
use crate::graph::{DualVector, PricingGraph};

pub use dp::{ng_dp, Direction, LabelMins, NgDpConfig, NgDpResult};
pub use dssr::{solve_ng_dssr, DssrMode, DssrState, NgConfig, NgOutcome};

/// Default ng-set size.
pub const DEFAULT_LAMBDA: usize = 5;

/// Memories are bitmasks, so a memory set holds at most this many vertices.
pub const MAX_MEMORY: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NgConstruction {
    UniformRandom,
    DualGuidedNeighborhood,
}

/// One memory set per vertex, each containing its own vertex, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgSets {
    eta: Vec<Vec<usize>>,
    lambda: usize,
    construction: Option<NgConstruction>,
}

impl NgSets {
    /// Arbitrary sets; `i` is added to `sets[i]` if missing.
    pub fn from_sets(sets: Vec<Vec<usize>>) -> Self {
        let eta: Vec<Vec<usize>> = sets
            .into_iter()
            .enumerate()
            .map(|(i, mut s)| {
                s.push(i);
                s.sort_unstable();
                s.dedup();
                s
            })
            .collect();
        let lambda = eta.iter().map(|s| s.len() - 1).max().unwrap_or(0);
        Self {
            eta,
            lambda,
            construction: None,
        }
    }

    /// `eta_i = {i}`: no elementarity beyond forbidding self-loops.
    pub fn singletons(n: usize) -> Self {
        Self::from_sets(vec![Vec::new(); n])
    }

    /// Every vertex remembers everything: ng-paths are elementary paths.
    pub fn full(n: usize) -> Self {
        Self::from_sets(vec![(0..n).collect(); n])
    }

    pub fn num_vertices(&self) -> usize {
        self.eta.len()
    }

    pub fn eta(&self, i: usize) -> &[usize] {
        &self.eta[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.eta[i].binary_search(&j).is_ok()
    }

    pub fn lambda(&self) -> usize {
        self.lambda
    }

    pub fn construction(&self) -> Option<NgConstruction> {
        self.construction
    }
}

/// Builds the ng-sets. The dual-guided variant keeps, for each vertex, the
/// `lambda` extended predecessors with the largest duals (ties to the
/// smaller id); the uniform variant draws `lambda` other alive vertices.
pub fn build_ng_sets(
    g: &PricingGraph,
    duals: &DualVector,
    lambda: i64,
    construction: NgConstruction,
    seed: u64,
) -> Result<NgSets> {
    if lambda < 0 {
        return Err(KepError::Parameter(format!("ng-set size {lambda} is negative")));
    }
    let lambda = lambda as usize;
    if lambda + 1 > MAX_MEMORY {
        return Err(KepError::Unsupported(format!(
            "ng-set size {lambda} exceeds {}",
            MAX_MEMORY - 1
        )));
    }
    let n = g.num_vertices();
    if duals.len() < n {
        return Err(KepError::Validation(format!(
            "dual vector has {} entries for {n} vertices",
            duals.len()
        )));
    }
    let alpha = duals.as_slice();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alive: Vec<usize> = g.alive_vertices().collect();
    let mut eta = Vec::with_capacity(n);
    for i in 0..n {
        let mut set = match construction {
            NgConstruction::DualGuidedNeighborhood => {
                let mut cand: Vec<usize> =
                    g.gamma_pred(i).iter().copied().filter(|&j| j != i).collect();
                cand.sort_by(|&a, &b| alpha[b].total_cmp(&alpha[a]).then(a.cmp(&b)));
                cand.truncate(lambda);
                cand
            }
            NgConstruction::UniformRandom => {
                let others: Vec<usize> = alive.iter().copied().filter(|&j| j != i).collect();
                others.choose_multiple(&mut rng, lambda).copied().collect()
            }
        };
        set.push(i);
        set.sort_unstable();
        eta.push(set);
    }
    Ok(NgSets {
        eta,
        lambda,
        construction: Some(construction),
    })
}

/// Memory after extending a path whose memory is `pi_prev` to vertex `i`:
/// `(pi_prev ∩ eta_i) ∪ {i}`. `None` when `i` is remembered, i.e. the
/// extension is forbidden. `pi_prev` must be sorted.
pub fn project_memory(pi_prev: &[usize], i: usize, sets: &NgSets) -> Option<Vec<usize>> {
    if pi_prev.binary_search(&i).is_ok() {
        return None;
    }
    let mut out: Vec<usize> = pi_prev
        .iter()
        .copied()
        .filter(|&v| sets.contains(i, v))
        .collect();
    let pos = out.binary_search(&i).unwrap_err();
    out.insert(pos, i);
    Some(out)
}
