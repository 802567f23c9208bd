use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Arrangement;
use crate::error::{KepError, Result};

/// Largest supported number of colors (color sets are bitmasks).
pub const MAX_COLORS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColoringStrategy {
    /// Independent uniform colors.
    UniformRandom,
    /// Consecutive intervals of `C` positions of the (shifted) arrangement
    /// each receive a uniformly random permutation of the colors.
    PermInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColoringPlan {
    pub strategy: ColoringStrategy,
    pub colors: usize,
    /// Rotation applied before the first trial; trial `t` uses `offset + t`.
    pub shift_offset: usize,
    pub seed: u64,
    /// Target probability that a fixed optimal path becomes colorful.
    pub rho: f64,
    /// Hard cap on trials; `None` means use [`super::trial_count`].
    pub trial_budget: Option<u64>,
}

impl ColoringPlan {
    pub fn new(strategy: ColoringStrategy, colors: usize, seed: u64) -> Self {
        Self {
            strategy,
            colors,
            shift_offset: 0,
            seed,
            rho: 0.99,
            trial_budget: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.colors < 2 {
            return Err(KepError::Parameter(format!(
                "need at least 2 colors, got {}",
                self.colors
            )));
        }
        if self.colors > MAX_COLORS {
            return Err(KepError::Unsupported(format!(
                "at most {MAX_COLORS} colors are supported, got {}",
                self.colors
            )));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(KepError::Parameter(format!("rho {} outside (0, 1)", self.rho)));
        }
        Ok(())
    }
}

/// Color of each vertex in `0..C`, or [`Coloring::UNCOLORED`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    color: Vec<u8>,
    num_colors: usize,
}

impl Coloring {
    pub const UNCOLORED: u8 = u8::MAX;

    /// Explicit coloring; `color[v] == UNCOLORED` leaves `v` out of the DP.
    pub fn from_colors(color: Vec<u8>, num_colors: usize) -> Self {
        assert!(color
            .iter()
            .all(|&c| c == Self::UNCOLORED || (c as usize) < num_colors));
        Self { color, num_colors }
    }

    pub fn color(&self, v: usize) -> Option<u8> {
        self.color.get(v).copied().filter(|&c| c != Self::UNCOLORED)
    }

    pub fn num_colors(&self) -> usize {
        self.num_colors
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.color
    }
}

/// RNG for trial `t`: one master seed, one stream per trial.
pub(crate) fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Colors the arranged vertices for trial `trial`. With `PermInterval` the
/// arrangement is rotated left by `shift_offset + trial` positions, cut into
/// intervals of `C` positions, and each interval gets a random permutation
/// of the colors (a random injection for a trailing partial interval).
pub fn color_vertices(plan: &ColoringPlan, arr: &Arrangement, trial: u64) -> Coloring {
    let c = plan.colors;
    let mut color = vec![Coloring::UNCOLORED; arr.num_vertices()];
    let mut rng = trial_rng(plan.seed, trial);
    let order = arr.order();
    let n = order.len();
    match plan.strategy {
        ColoringStrategy::UniformRandom => {
            for &v in order {
                color[v] = rng.gen_range(0..c) as u8;
            }
        }
        ColoringStrategy::PermInterval => {
            if n > 0 {
                let shift = ((plan.shift_offset as u64 + trial) % n as u64) as usize;
                let mut perm: Vec<u8> = (0..c as u8).collect();
                for start in (0..n).step_by(c) {
                    perm.shuffle(&mut rng);
                    let end = (start + c).min(n);
                    for (k, p) in (start..end).enumerate() {
                        color[order[(p + shift) % n]] = perm[k];
                    }
                }
            }
        }
    }
    Coloring {
        color,
        num_colors: c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::PricingGraph;

    fn line(n: usize) -> (PricingGraph, Arrangement) {
        let source: Vec<(usize, f64)> = (0..n).map(|v| (v, 0.0)).collect();
        let g = PricingGraph::from_arcs(n, &source, &[], 2).unwrap();
        let arr = Arrangement::identity(&g);
        (g, arr)
    }

    #[test]
    fn intervals_are_rainbow() {
        let (_, arr) = line(6);
        let plan = ColoringPlan::new(ColoringStrategy::PermInterval, 3, 11);
        let col = color_vertices(&plan, &arr, 0);
        let mut a: Vec<u8> = (0..3).map(|v| col.color(v).unwrap()).collect();
        let mut b: Vec<u8> = (3..6).map(|v| col.color(v).unwrap()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, vec![0, 1, 2]);
        assert_eq!(b, vec![0, 1, 2]);
    }

    #[test]
    fn shifted_intervals_are_rainbow() {
        let (_, arr) = line(7);
        let plan = ColoringPlan::new(ColoringStrategy::PermInterval, 3, 5);
        for t in 0..7 {
            let col = color_vertices(&plan, &arr, t);
            let shift = t as usize;
            for start in (0..7).step_by(3) {
                let mut seen = [false; 3];
                for p in start..(start + 3).min(7) {
                    let c = col.color((p + shift) % 7).unwrap() as usize;
                    assert!(!seen[c]);
                    seen[c] = true;
                }
            }
        }
    }

    #[test]
    fn same_seed_same_coloring() {
        let (_, arr) = line(10);
        let plan = ColoringPlan::new(ColoringStrategy::PermInterval, 4, 1);
        assert_eq!(color_vertices(&plan, &arr, 2), color_vertices(&plan, &arr, 2));
        let uni = ColoringPlan::new(ColoringStrategy::UniformRandom, 4, 1);
        assert_eq!(color_vertices(&uni, &arr, 2), color_vertices(&uni, &arr, 2));
    }

    #[test]
    fn plan_validation() {
        assert!(ColoringPlan::new(ColoringStrategy::PermInterval, 1, 0).validate().is_err());
        assert!(ColoringPlan::new(ColoringStrategy::PermInterval, 21, 0).validate().is_err());
        let mut p = ColoringPlan::new(ColoringStrategy::PermInterval, 4, 0);
        p.rho = 1.0;
        assert!(p.validate().is_err());
    }
}
