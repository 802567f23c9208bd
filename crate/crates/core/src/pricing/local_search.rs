//! Segment-replacement local search: a move removes up to three consecutive
//! vertices of the current path and inserts up to three new ones in their
//! place (pure insertion, pure removal and exchange are special cases).

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EmpplcInstance, EmpplcSolution, SolutionKind, NEGATIVE_TOL};
use crate::graph::PricingGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchConfig {
    pub time_limit: Duration,
    /// Stop after this many restarts even if time remains.
    pub max_restarts: Option<usize>,
    /// Largest segment removed or inserted by one move.
    pub max_segment: usize,
    pub seed: u64,
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(1),
            max_restarts: None,
            max_segment: 3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOutcome {
    /// First path of negative cost met during the search.
    pub first_negative: Option<EmpplcSolution>,
    pub best: EmpplcSolution,
    pub restarts: usize,
}

impl LocalSearchOutcome {
    /// The first negative path, or the best path when none was negative.
    pub fn first_or_best(&self) -> &EmpplcSolution {
        self.first_negative.as_ref().unwrap_or(&self.best)
    }
}

struct Move {
    start: usize,
    removed: usize,
    inserted: Vec<usize>,
    delta: f64,
}

pub fn solve_local_search(inst: &EmpplcInstance, cfg: &LocalSearchConfig) -> LocalSearchOutcome {
    let g = &inst.graph;
    let deadline = Instant::now() + cfg.time_limit;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let altruists: Vec<usize> = g.out_arcs(g.source()).map(|a| a.to).collect();
    if altruists.is_empty() {
        return LocalSearchOutcome {
            first_negative: None,
            best: EmpplcSolution::no_path(SolutionKind::Heuristic, false),
            restarts: 0,
        };
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut first_negative: Option<(f64, Vec<usize>)> = None;
    let mut in_path = vec![false; g.num_vertices()];
    let mut restarts = 0usize;
    let mut path = greedy_start(g);
    loop {
        let mut cost = g.path_cost(&path).expect("moves keep the path valid");
        loop {
            record(&mut best, &mut first_negative, cost, &path);
            if Instant::now() >= deadline {
                break;
            }
            for f in in_path.iter_mut() {
                *f = false;
            }
            for &v in &path {
                in_path[v] = true;
            }
            match first_improving_move(g, &path, &in_path, cfg.max_segment) {
                Some(m) => {
                    path.splice(m.start..m.start + m.removed, m.inserted);
                    cost += m.delta;
                    // Re-sum to keep the stored cost exact.
                    cost = g.path_cost(&path).unwrap_or(cost);
                }
                None => break,
            }
        }
        if Instant::now() >= deadline || cfg.max_restarts.is_some_and(|m| restarts >= m) {
            break;
        }
        restarts += 1;
        path = random_start(g, &altruists, &mut rng);
    }

    let to_sol = |(c, p): (f64, Vec<usize>)| EmpplcSolution {
        path: Some(p),
        cost: c,
        is_proven_optimal: false,
        kind: SolutionKind::Heuristic,
    };
    LocalSearchOutcome {
        first_negative: first_negative.map(to_sol),
        best: to_sol(best.expect("at least one path was evaluated")),
        restarts,
    }
}

fn record(
    best: &mut Option<(f64, Vec<usize>)>,
    first_negative: &mut Option<(f64, Vec<usize>)>,
    cost: f64,
    path: &[usize],
) {
    let better = match best {
        None => true,
        Some((b, bp)) => cost < *b || (cost == *b && path < bp.as_slice()),
    };
    if better {
        *best = Some((cost, path.to_vec()));
    }
    if first_negative.is_none() && cost < -NEGATIVE_TOL {
        *first_negative = Some((cost, path.to_vec()));
    }
}

/// Cheapest source arc, then repeatedly the cheapest negative arc to a new
/// vertex while the length allows.
fn greedy_start(g: &PricingGraph) -> Vec<usize> {
    let first = g
        .out_arcs(g.source())
        .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.to.cmp(&b.to)))
        .expect("caller checked for source arcs");
    let mut path = vec![first.to];
    let mut used = vec![false; g.num_vertices()];
    used[first.to] = true;
    while path.len() < g.max_len() {
        let last = *path.last().unwrap();
        let next = g
            .out_arcs(last)
            .filter(|a| !used[a.to] && a.cost < 0.0)
            .min_by(|a, b| a.cost.total_cmp(&b.cost).then(a.to.cmp(&b.to)));
        match next {
            Some(a) => {
                used[a.to] = true;
                path.push(a.to);
            }
            None => break,
        }
    }
    path
}

/// A random altruist followed by a random elementary walk of random length.
fn random_start(g: &PricingGraph, altruists: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let start = *altruists.choose(rng).unwrap();
    let target_len = rng.gen_range(1..=g.max_len());
    let mut path = vec![start];
    let mut used = vec![false; g.num_vertices()];
    used[start] = true;
    let mut options = Vec::new();
    while path.len() < target_len {
        options.clear();
        options.extend(
            g.out_arcs(*path.last().unwrap())
                .filter(|a| !used[a.to])
                .map(|a| a.to),
        );
        match options.choose(rng) {
            Some(&v) => {
                used[v] = true;
                path.push(v);
            }
            None => break,
        }
    }
    path
}

fn first_improving_move(
    g: &PricingGraph,
    path: &[usize],
    in_path: &[bool],
    max_segment: usize,
) -> Option<Move> {
    let len = path.len();
    let s = g.source();
    let mut seg = Vec::with_capacity(max_segment);
    for start in 0..=len {
        let prev = if start == 0 { s } else { path[start - 1] };
        let max_removed = max_segment.min(len - start);
        for removed in 0..=max_removed {
            let next = path.get(start + removed).copied();
            // Cost of the arcs that disappear: prev -> removed... -> next.
            let mut old = 0.0;
            let mut u = prev;
            for &v in &path[start..start + removed] {
                old += g.cost(u, v).unwrap();
                u = v;
            }
            if let Some(nx) = next {
                old += g.cost(u, nx).unwrap();
            }
            for inserted in 0..=max_segment {
                if removed == 0 && inserted == 0 {
                    continue;
                }
                let new_len = len - removed + inserted;
                if new_len == 0 || new_len > g.max_len() {
                    continue;
                }
                // A trailing removal with nothing after it is a truncation.
                seg.clear();
                if let Some(m) = search_segment(
                    g,
                    prev,
                    next,
                    inserted,
                    in_path,
                    &path[start..start + removed],
                    old,
                    &mut seg,
                    0.0,
                ) {
                    return Some(Move {
                        start,
                        removed,
                        inserted: m.0,
                        delta: m.1,
                    });
                }
            }
        }
    }
    None
}

/// Depth-first search for a replacement segment of exactly `remaining` more
/// vertices from `at`, reconnecting to `next`, that beats `old`.
#[allow(clippy::too_many_arguments)]
fn search_segment(
    g: &PricingGraph,
    at: usize,
    next: Option<usize>,
    remaining: usize,
    in_path: &[bool],
    removed: &[usize],
    old: f64,
    seg: &mut Vec<usize>,
    acc: f64,
) -> Option<(Vec<usize>, f64)> {
    if remaining == 0 {
        let close = match next {
            Some(nx) => g.cost(at, nx)?,
            None => 0.0,
        };
        let delta = acc + close - old;
        if delta < -1e-12 && seg.as_slice() != removed {
            return Some((seg.clone(), delta));
        }
        return None;
    }
    for a in g.out_arcs(at) {
        let v = a.to;
        let reusable = removed.contains(&v);
        if (in_path[v] && !reusable) || seg.contains(&v) || Some(v) == next {
            continue;
        }
        seg.push(v);
        let found = search_segment(g, v, next, remaining - 1, in_path, removed, old, seg, acc + a.cost);
        seg.pop();
        if found.is_some() {
            return found;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_pricing_graph, preprocess, DualVector};
    use crate::instance::fixture_g1;

    fn cfg() -> LocalSearchConfig {
        LocalSearchConfig {
            time_limit: Duration::from_secs(5),
            max_restarts: Some(10),
            ..Default::default()
        }
    }

    #[test]
    fn g1_finds_a_negative_chain() {
        let g = preprocess(&build_pricing_graph(&fixture_g1(), &DualVector::zeros(7)).unwrap());
        let inst = EmpplcInstance::new(g);
        let out = solve_local_search(&inst, &cfg());
        assert!(out.best.cost <= -1.0);
        assert!(out.best.is_consistent(&inst.graph));
        let first = out.first_negative.as_ref().unwrap();
        assert!(first.is_negative());
        assert!(first.is_consistent(&inst.graph));
        assert_eq!(out.best.cost, -3.0);
    }

    #[test]
    fn nonnegative_instance_has_no_first_negative() {
        let g = PricingGraph::from_arcs(3, &[(0, 1.0)], &[(0, 1, 0.5), (1, 2, 0.25)], 3).unwrap();
        let out = solve_local_search(&EmpplcInstance::new(g), &cfg());
        assert!(out.first_negative.is_none());
        assert_eq!(out.first_or_best(), &out.best);
        assert!(out.best.cost >= 0.0);
    }

    #[test]
    fn deterministic_with_restart_cap() {
        let duals = DualVector::new(vec![0.3, 0.1, 0.9, 0.2, 0.6, 0.4, 0.8]);
        let g = preprocess(&build_pricing_graph(&fixture_g1(), &duals).unwrap());
        let inst = EmpplcInstance::new(g);
        assert_eq!(solve_local_search(&inst, &cfg()), solve_local_search(&inst, &cfg()));
    }
}
