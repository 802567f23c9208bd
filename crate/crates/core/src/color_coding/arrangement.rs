//! Linear arrangement of the colored vertices that keeps extended neighbors
//! close together (minimum linear arrangement over the gamma relation).

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::PricingGraph;

/// A permutation of the colored (alive, non-source) vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrangement {
    order: Vec<usize>,
    /// Position of each vertex, `usize::MAX` when not arranged.
    position: Vec<usize>,
    delta_sum: u64,
    delta_max: u64,
}

impl Arrangement {
    /// Alive vertices in increasing id order.
    pub fn identity(g: &PricingGraph) -> Self {
        Self::from_order(g, g.alive_vertices().collect())
    }

    /// Panics if `order` is not a permutation of the alive vertices.
    pub fn from_order(g: &PricingGraph, order: Vec<usize>) -> Self {
        let mut position = vec![usize::MAX; g.num_vertices()];
        for (p, &v) in order.iter().enumerate() {
            assert!(g.is_vertex_alive(v) && v < g.num_vertices(), "vertex {v} not alive");
            assert_eq!(position[v], usize::MAX, "vertex {v} appears twice");
            position[v] = p;
        }
        assert_eq!(order.len(), g.alive_vertices().count(), "order misses vertices");
        let (delta_sum, delta_max) = evaluate(g, &position);
        Self {
            order,
            position,
            delta_sum,
            delta_max,
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Size of the vertex id space (arranged or not).
    pub fn num_vertices(&self) -> usize {
        self.position.len()
    }

    pub fn position(&self, v: usize) -> Option<usize> {
        self.position.get(v).copied().filter(|&p| p != usize::MAX)
    }

    /// Sum of `|x_i - x_j|` over ordered pairs with `j` in `gamma(i)`.
    pub fn delta_sum(&self) -> u64 {
        self.delta_sum
    }

    /// Largest `|x_i - x_j|` over extended-neighbor pairs.
    pub fn delta_max(&self) -> u64 {
        self.delta_max
    }
}

/// Recomputes `(delta_sum, delta_max)` for the given positions.
pub fn evaluate(g: &PricingGraph, position: &[usize]) -> (u64, u64) {
    let mut sum = 0u64;
    let mut max = 0u64;
    for i in g.alive_vertices() {
        for &j in g.gamma(i) {
            let d = position[i].abs_diff(position[j]) as u64;
            sum += d;
            max = max.max(d);
        }
    }
    (sum, max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrangementConfig {
    /// Number of candidate swaps evaluated.
    pub max_evaluations: u64,
    pub time_limit: Option<Duration>,
    /// Non-improving evaluations before perturbing from the best order.
    pub stagnation: u64,
    pub seed: u64,
}

impl Default for ArrangementConfig {
    fn default() -> Self {
        Self {
            max_evaluations: 2_000_000,
            time_limit: Some(Duration::from_secs(2)),
            stagnation: 20_000,
            seed: 0,
        }
    }
}

/// Swap-based local search on `delta_sum`, started from the better of the
/// identity order and a breadth-first (Cuthill-McKee style) order of the
/// gamma relation. Never returns something worse than the identity.
pub fn build_arrangement(g: &PricingGraph, cfg: &ArrangementConfig) -> Arrangement {
    let identity = Arrangement::identity(g);
    let bfs = Arrangement::from_order(g, bfs_order(g));
    let start = if bfs.delta_sum < identity.delta_sum {
        bfs
    } else {
        identity
    };
    let n = start.order.len();
    if n < 3 || start.delta_sum == 0 {
        return start;
    }
    let deadline = cfg.time_limit.map(|t| Instant::now() + t);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut order = start.order.clone();
    let mut position = start.position.clone();
    let mut current = start.delta_sum as i64;
    let mut best_order = order.clone();
    let mut best = current;
    let mut streak = 0u64;

    for eval in 0..cfg.max_evaluations {
        if eval % 1024 == 0 && deadline.is_some_and(|d| Instant::now() >= d) {
            break;
        }
        let a = rng.gen_range(0..n);
        let u = order[a];
        let b = if rng.gen_bool(0.5) {
            rng.gen_range(0..n)
        } else {
            // Aim at the mean position of u's extended neighbors.
            let nb = g.gamma(u);
            let mean = nb.iter().map(|&j| position[j]).sum::<usize>() / nb.len().max(1);
            let jitter = rng.gen_range(0..3usize);
            (mean + jitter).saturating_sub(1).min(n - 1)
        };
        if a == b {
            continue;
        }
        let v = order[b];
        let d = swap_delta(g, &position, u, v);
        if d < 0 {
            order.swap(a, b);
            position[u] = b;
            position[v] = a;
            current += d;
            if current < best {
                best = current;
                best_order.clone_from(&order);
                streak = 0;
            }
        } else {
            streak += 1;
        }
        if streak >= cfg.stagnation {
            streak = 0;
            order.clone_from(&best_order);
            for (p, &w) in order.iter().enumerate() {
                position[w] = p;
            }
            for _ in 0..(n / 10).max(2) {
                let i = rng.gen_range(0..n - 1);
                let (x, y) = (order[i], order[i + 1]);
                current += swap_delta(g, &position, x, y);
                order.swap(i, i + 1);
                position[x] = i + 1;
                position[y] = i;
            }
        }
    }
    Arrangement::from_order(g, best_order)
}

/// Change of `delta_sum` when `u` and `v` trade places.
fn swap_delta(g: &PricingGraph, position: &[usize], u: usize, v: usize) -> i64 {
    let (xu, xv) = (position[u] as i64, position[v] as i64);
    let mut d = 0i64;
    for &j in g.gamma(u) {
        if j != u && j != v {
            let xj = position[j] as i64;
            d += (xv - xj).abs() - (xu - xj).abs();
        }
    }
    for &j in g.gamma(v) {
        if j != u && j != v {
            let xj = position[j] as i64;
            d += (xu - xj).abs() - (xv - xj).abs();
        }
    }
    // Each unordered pair is counted in both directions.
    2 * d
}

fn bfs_order(g: &PricingGraph) -> Vec<usize> {
    let mut seen = vec![false; g.num_vertices()];
    let mut verts: Vec<usize> = g.alive_vertices().collect();
    verts.sort_by_key(|&v| (g.gamma(v).len(), v));
    let mut order = Vec::with_capacity(verts.len());
    let mut queue = VecDeque::new();
    for &root in &verts {
        if seen[root] {
            continue;
        }
        seen[root] = true;
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = g.gamma(u).iter().copied().filter(|&j| !seen[j]).collect();
            next.sort_by_key(|&j| (g.gamma(j).len(), j));
            for j in next {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    order
}
