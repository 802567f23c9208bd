//! Minimum-cost colorful path: states are (color set, end vertex), the color
//! set size being the number of arcs from the source.

use super::Coloring;
use crate::error::{KepError, Result};
use crate::graph::PricingGraph;
use crate::pricing::{EmpplcSolution, SolutionKind};

/// Upper limit on `2^C * colored vertices` table entries.
pub const MAX_DP_ENTRIES: usize = 1 << 25;

const NO_PRED: u32 = u32::MAX;

/// Reusable tables for repeated trials on the same graph.
pub struct ColorfulDp {
    /// Colored vertices in id order; their index is the compact id.
    verts: Vec<usize>,
    compact: Vec<u32>,
    colors: usize,
    cost: Vec<f64>,
    pred: Vec<u32>,
    active: Vec<bool>,
}

impl ColorfulDp {
    pub fn new(g: &PricingGraph, colors: usize) -> Result<Self> {
        let verts: Vec<usize> = g.alive_vertices().collect();
        let mut compact = vec![u32::MAX; g.num_vertices()];
        for (k, &v) in verts.iter().enumerate() {
            compact[v] = k as u32;
        }
        let entries = (1usize << colors).saturating_mul(verts.len().max(1));
        if entries > MAX_DP_ENTRIES {
            return Err(KepError::SizeLimit(format!(
                "colorful DP would need {entries} states (limit {MAX_DP_ENTRIES})"
            )));
        }
        Ok(Self {
            verts,
            compact,
            colors,
            cost: vec![f64::INFINITY; entries],
            pred: vec![NO_PRED; entries],
            active: vec![false; 1 << colors],
        })
    }

    /// Solves one trial. Only vertices colored in `coloring` take part.
    pub fn solve(&mut self, g: &PricingGraph, coloring: &Coloring) -> EmpplcSolution {
        assert_eq!(coloring.num_colors(), self.colors);
        let nv = self.verts.len();
        self.cost.fill(f64::INFINITY);
        self.pred.fill(NO_PRED);
        self.active.fill(false);
        let limit = g.max_len();
        let col = |v: usize| coloring.color(v);

        for a in g.out_arcs(g.source()) {
            if let Some(c) = col(a.to) {
                let mask = 1usize << c;
                let idx = mask * nv + self.compact[a.to] as usize;
                if a.cost < self.cost[idx] {
                    self.cost[idx] = a.cost;
                    self.pred[idx] = NO_PRED;
                    self.active[mask] = true;
                }
            }
        }
        // Extending adds a bit, so increasing numeric order is a valid
        // topological order of the states.
        for mask in 1usize..(1 << self.colors) {
            if !self.active[mask] || mask.count_ones() as usize >= limit {
                continue;
            }
            for k in 0..nv {
                let here = self.cost[mask * nv + k];
                if here == f64::INFINITY {
                    continue;
                }
                let v = self.verts[k];
                for a in g.out_arcs(v) {
                    let Some(c) = col(a.to) else { continue };
                    let bit = 1usize << c;
                    if mask & bit != 0 {
                        continue;
                    }
                    let next = mask | bit;
                    let idx = next * nv + self.compact[a.to] as usize;
                    let cand = here + a.cost;
                    if cand < self.cost[idx] {
                        self.cost[idx] = cand;
                        self.pred[idx] = k as u32;
                        self.active[next] = true;
                    }
                }
            }
        }

        let mut best: Option<(f64, Vec<usize>)> = None;
        for mask in 1usize..(1 << self.colors) {
            if !self.active[mask] {
                continue;
            }
            for k in 0..nv {
                let c = self.cost[mask * nv + k];
                if c == f64::INFINITY {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some((b, _)) => c <= *b,
                };
                if better {
                    let path = self.reconstruct(coloring, mask, k);
                    let take = match &best {
                        Some((b, bp)) => c < *b || path < *bp,
                        None => true,
                    };
                    if take {
                        best = Some((c, path));
                    }
                }
            }
        }
        match best {
            Some((cost, path)) => {
                // Re-sum along the path so the stored cost is the arc sum.
                let cost = g.path_cost(&path).unwrap_or(cost);
                EmpplcSolution {
                    path: Some(path),
                    cost,
                    is_proven_optimal: false,
                    kind: SolutionKind::Heuristic,
                }
            }
            None => EmpplcSolution::no_path(SolutionKind::Heuristic, false),
        }
    }

    /// After [`Self::solve`]: the best path of every state whose cost is at
    /// most `threshold`, restricted to paths of at least `min_vertices`
    /// vertices, cheapest first, at most `limit` of them.
    pub fn paths_below(
        &self,
        coloring: &Coloring,
        threshold: f64,
        min_vertices: usize,
        limit: usize,
    ) -> Vec<(f64, Vec<usize>)> {
        let nv = self.verts.len();
        let mut found = Vec::new();
        for mask in 1usize..(1 << self.colors) {
            if !self.active[mask] || (mask.count_ones() as usize) < min_vertices {
                continue;
            }
            for k in 0..nv {
                let c = self.cost[mask * nv + k];
                if c <= threshold {
                    found.push((c, self.reconstruct(coloring, mask, k)));
                }
            }
        }
        found.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        found.truncate(limit);
        found
    }

    fn reconstruct(&self, coloring: &Coloring, mut mask: usize, mut k: usize) -> Vec<usize> {
        let nv = self.verts.len();
        let mut rev = Vec::new();
        loop {
            let v = self.verts[k];
            rev.push(v);
            let p = self.pred[mask * nv + k];
            if p == NO_PRED {
                break;
            }
            mask &= !(1usize << coloring.color(v).unwrap());
            k = p as usize;
        }
        rev.reverse();
        rev
    }
}

/// One-shot colorful DP.
pub fn colorful_dp(g: &PricingGraph, coloring: &Coloring) -> Result<EmpplcSolution> {
    let mut dp = ColorfulDp::new(g, coloring.num_colors())?;
    Ok(dp.solve(g, coloring))
}
