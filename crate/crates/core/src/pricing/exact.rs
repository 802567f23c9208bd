use super::{EmpplcInstance, EmpplcSolution, SolutionKind, Target, NEGATIVE_TOL};
use crate::error::{KepError, Result};
use crate::graph::PricingGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactConfig {
    /// Maximum number of search-tree nodes before giving up.
    pub node_budget: u64,
    /// Prune with a hop-limited walk lower bound on the remaining cost.
    pub bound_pruning: bool,
}

impl Default for ExactConfig {
    fn default() -> Self {
        Self {
            node_budget: 50_000_000,
            bound_pruning: false,
        }
    }
}

struct Search<'a> {
    g: &'a PricingGraph,
    limit: usize,
    budget: u64,
    nodes: u64,
    /// `walk_lb[k][v]`: cheapest walk of at most `k` arcs leaving `v`.
    walk_lb: Option<Vec<Vec<f64>>>,
    first_negative: bool,
    visited: Vec<bool>,
    path: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
    done: bool,
}

/// Depth-first enumeration of every elementary path from the source. Ties
/// resolve to the lexicographically smallest vertex list, which is the first
/// one the search meets.
pub fn solve_exact(inst: &EmpplcInstance, cfg: &ExactConfig) -> Result<EmpplcSolution> {
    let g = &inst.graph;
    let limit = g.max_len();
    let walk_lb = cfg.bound_pruning.then(|| walk_bounds(g, limit));
    let mut search = Search {
        g,
        limit,
        budget: cfg.node_budget,
        nodes: 0,
        walk_lb,
        first_negative: inst.target == Target::FirstNegative,
        visited: vec![false; g.num_vertices()],
        path: Vec::with_capacity(limit),
        best: None,
        done: false,
    };
    search.extend(g.source(), 0.0)?;
    let stopped_early = search.done;
    Ok(match search.best {
        Some((cost, path)) => EmpplcSolution {
            path: Some(path),
            cost,
            is_proven_optimal: !stopped_early,
            kind: SolutionKind::Exact,
        },
        None => EmpplcSolution::no_path(SolutionKind::Exact, true),
    })
}

impl Search<'_> {
    fn extend(&mut self, v: usize, cost: f64) -> Result<()> {
        if self.path.len() >= self.limit {
            return Ok(());
        }
        let g = self.g;
        for arc in g.out_arcs(v) {
            let w = arc.to;
            if self.visited[w] {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(KepError::SizeLimit(format!(
                    "exact search exceeded {} nodes",
                    self.budget
                )));
            }
            let c = cost + arc.cost;
            self.path.push(w);
            if self.best.as_ref().is_none_or(|(b, _)| c < *b) {
                self.best = Some((c, self.path.clone()));
                if self.first_negative && c < -NEGATIVE_TOL {
                    self.done = true;
                }
            }
            let prune = match (&self.walk_lb, &self.best) {
                (Some(lb), Some((b, _))) => c + lb[self.limit - self.path.len()][w] >= *b,
                _ => false,
            };
            if !prune && !self.done {
                self.visited[w] = true;
                self.extend(w, c)?;
                self.visited[w] = false;
            }
            self.path.pop();
            if self.done {
                return Ok(());
            }
        }
        Ok(())
    }
}

fn walk_bounds(g: &PricingGraph, limit: usize) -> Vec<Vec<f64>> {
    let n = g.num_vertices();
    let mut lb = vec![vec![0.0; n]; limit + 1];
    for k in 1..=limit {
        for v in 0..n {
            let mut best = 0.0f64;
            for a in g.out_arcs(v) {
                best = best.min(a.cost + lb[k - 1][a.to]);
            }
            lb[k][v] = best;
        }
    }
    lb
}
