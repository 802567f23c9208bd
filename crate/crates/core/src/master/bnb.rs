//! Best-bound branch-and-bound over the pooled columns.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::{Duration, Instant};

use super::simplex::Simplex;
use super::{RestrictedMaster, INTEGRALITY_TOL};
use crate::error::Result;
use crate::instance::{KepSolution, SolveStatus};

#[derive(Debug, Clone)]
pub struct IpOutcome {
    /// `upper_bound` is the root LP value, or the best open node bound when
    /// the time limit stopped the search (`status` is then `TimeLimit`).
    pub solution: KepSolution,
    /// Column ids of the chosen exchanges.
    pub chosen: Vec<usize>,
    /// Nodes whose LP was solved, the root excluded.
    pub nodes: u64,
}

#[derive(Debug, Clone)]
struct BranchNode {
    fixed_one: Vec<usize>,
    fixed_zero: Vec<usize>,
    lp_bound: f64,
    depth: usize,
    seq: u64,
}

impl PartialEq for BranchNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BranchNode {}

impl PartialOrd for BranchNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BranchNode {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lp_bound
            .total_cmp(&other.lp_bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct NodeLp {
    value: f64,
    /// Values of all pool columns (0 for excluded ones).
    x: Vec<f64>,
}

fn solve_node(master: &RestrictedMaster, fixed_one: &[usize], fixed_zero: &[usize]) -> Result<NodeLp> {
    let cols = master.columns();
    let mut used = vec![false; master.num_vertices()];
    let mut base = 0.0;
    for &k in fixed_one {
        base += cols[k].weight();
        for v in cols[k].vertices() {
            used[v.index()] = true;
        }
    }
    let mut excluded = vec![false; cols.len()];
    for &k in fixed_zero {
        excluded[k] = true;
    }
    let mut lp = Simplex::new(master.num_vertices());
    let mut map = Vec::new();
    for (k, e) in cols.iter().enumerate() {
        if excluded[k] || fixed_one.contains(&k) || e.vertices().iter().any(|v| used[v.index()]) {
            continue;
        }
        lp.add_column(e.vertices().iter().map(|v| v.0).collect(), e.weight());
        map.push(k);
    }
    lp.solve()?;
    let mut x = vec![0.0; cols.len()];
    for (&k, v) in map.iter().zip(lp.primal()) {
        x[k] = v;
    }
    for &k in fixed_one {
        x[k] = 1.0;
    }
    Ok(NodeLp {
        value: base + lp.value(),
        x,
    })
}

fn is_integral(x: &[f64]) -> bool {
    x.iter()
        .all(|&v| v <= INTEGRALITY_TOL || v >= 1.0 - INTEGRALITY_TOL)
}

/// Greedy packing: columns by decreasing LP value, then weight, then id.
fn round(master: &RestrictedMaster, x: &[f64]) -> (f64, Vec<usize>) {
    let cols = master.columns();
    let mut order: Vec<usize> = (0..cols.len()).filter(|&k| x[k] > INTEGRALITY_TOL).collect();
    order.sort_by(|&a, &b| {
        x[b].total_cmp(&x[a])
            .then(cols[b].weight().total_cmp(&cols[a].weight()))
            .then(a.cmp(&b))
    });
    let mut used = vec![false; master.num_vertices()];
    let mut pick = Vec::new();
    let mut value = 0.0;
    for k in order {
        if cols[k].vertices().iter().all(|v| !used[v.index()]) {
            for v in cols[k].vertices() {
                used[v.index()] = true;
            }
            value += cols[k].weight();
            pick.push(k);
        }
    }
    pick.sort_unstable();
    (value, pick)
}

/// Most fractional column; ties go to the larger weight, then the lower id.
fn branching_column(master: &RestrictedMaster, x: &[f64]) -> Option<usize> {
    let cols = master.columns();
    let mut best: Option<(f64, usize)> = None;
    for (k, &v) in x.iter().enumerate() {
        if v <= INTEGRALITY_TOL || v >= 1.0 - INTEGRALITY_TOL {
            continue;
        }
        let dist = (v - 0.5).abs();
        let better = match best {
            None => true,
            Some((d, b)) => {
                dist < d - 1e-12
                    || (dist <= d + 1e-12 && cols[k].weight() > cols[b].weight())
            }
        };
        if better {
            best = Some((dist, k));
        }
    }
    best.map(|(_, k)| k)
}

/// Optimal 0/1 packing over the pooled columns. If the last LP solution of
/// `master` is integral it is returned as is.
pub fn solve_restricted_ip(master: &RestrictedMaster, time_limit: Option<Duration>) -> Result<IpOutcome> {
    let start = Instant::now();
    let finish = |chosen: Vec<usize>, ub: f64, status: SolveStatus, nodes: u64| -> Result<IpOutcome> {
        let exchanges = chosen.iter().map(|&k| master.columns()[k].clone()).collect();
        let mut timings = BTreeMap::new();
        timings.insert("ip".to_string(), start.elapsed().as_secs_f64());
        Ok(IpOutcome {
            solution: KepSolution::new(exchanges, ub, status, timings)?,
            chosen,
            nodes,
        })
    };
    if master.is_integral() && master.primal.len() == master.num_columns() {
        return finish(master.integral_support(), master.lp_value(), SolveStatus::OptimalLP, 0);
    }

    let root = solve_node(master, &[], &[])?;
    let root_value = root.value;
    let (mut inc_value, mut incumbent) = round(master, &root.x);
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut nodes = 0u64;
    heap.push(BranchNode {
        fixed_one: Vec::new(),
        fixed_zero: Vec::new(),
        lp_bound: root.value,
        depth: 0,
        seq,
    });
    let mut pending_root = Some(root);
    let tol = 1e-9;
    while let Some(node) = heap.pop() {
        if node.lp_bound <= inc_value + tol {
            // Best-bound order: nothing left can improve.
            heap.clear();
            break;
        }
        if time_limit.is_some_and(|t| start.elapsed() >= t) {
            let ub = node.lp_bound.max(inc_value);
            return finish(incumbent, ub, SolveStatus::TimeLimit, nodes);
        }
        let lp = match pending_root.take() {
            Some(r) => r,
            None => {
                nodes += 1;
                solve_node(master, &node.fixed_one, &node.fixed_zero)?
            }
        };
        if lp.value <= inc_value + tol {
            continue;
        }
        let (rv, rpick) = round(master, &lp.x);
        if rv > inc_value + tol {
            inc_value = rv;
            incumbent = rpick;
        }
        if is_integral(&lp.x) {
            continue;
        }
        let Some(k) = branching_column(master, &lp.x) else {
            continue;
        };
        for one in [true, false] {
            seq += 1;
            let mut child = node.clone();
            child.depth += 1;
            child.seq = seq;
            child.lp_bound = lp.value;
            if one {
                child.fixed_one.push(k);
            } else {
                child.fixed_zero.push(k);
            }
            heap.push(child);
        }
    }
    finish(incumbent, root_value, SolveStatus::OptimalLP, nodes)
}
