//! Independent oracles shared by the integration tests. Nothing here calls
//! the solver code paths it is used to check.
#![allow(dead_code)]

use kepcg::graph::PricingGraph;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random pricing graph with integer costs, so path sums are exact.
/// Source arcs cost `alpha >= 0`; arc costs lie in [-3, 2].
pub fn random_pricing_graph(seed: u64, max_n: usize, max_l: usize) -> PricingGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(3..=max_n);
    let l = rng.gen_range(1..=max_l);
    let mean_degree: f64 = rng.gen_range(1.0..4.0);
    let p = (mean_degree / (n - 1) as f64).min(1.0);
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);
    let k = rng.gen_range(1..=3.min(n));
    let sources: Vec<usize> = ids[..k].to_vec();
    // Half the graphs keep sources free of incoming arcs, as altruists are.
    let kep_like = rng.gen_bool(0.5);
    let source_arcs: Vec<(usize, f64)> = sources
        .iter()
        .map(|&v| (v, rng.gen_range(0..=2) as f64))
        .collect();
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u == v || (kep_like && sources.contains(&v)) {
                continue;
            }
            if rng.gen_bool(p) {
                arcs.push((u, v, rng.gen_range(-3..=2) as f64));
            }
        }
    }
    PricingGraph::from_arcs(n, &source_arcs, &arcs, l).unwrap()
}

/// Every elementary path `(s, v1, ..., vk)` with `1 <= k <= L` over alive
/// arcs, with its cost, in lexicographic order.
pub fn all_paths(g: &PricingGraph) -> Vec<(f64, Vec<usize>)> {
    fn rec(
        g: &PricingGraph,
        at: usize,
        cost: f64,
        path: &mut Vec<usize>,
        seen: &mut [bool],
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        if path.len() == g.max_len() {
            return;
        }
        let mut next: Vec<(usize, f64)> = g.out_arcs(at).map(|a| (a.to, a.cost)).collect();
        next.sort_by_key(|&(v, _)| v);
        for (v, c) in next {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            path.push(v);
            out.push((cost + c, path.clone()));
            rec(g, v, cost + c, path, seen, out);
            path.pop();
            seen[v] = false;
        }
    }
    let mut out = Vec::new();
    let mut seen = vec![false; g.num_vertices()];
    rec(g, g.source(), 0.0, &mut Vec::new(), &mut seen, &mut out);
    out
}

/// Cheapest elementary path, ties to the lexicographically smallest.
pub fn brute_min(g: &PricingGraph) -> Option<(f64, Vec<usize>)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for (c, p) in all_paths(g) {
        if best.as_ref().map_or(true, |(b, bp)| c < *b || (c == *b && p < *bp)) {
            best = Some((c, p));
        }
    }
    best
}

/// Subset DP over visited sets; `n` must be small.
pub fn held_karp(g: &PricingGraph) -> Option<f64> {
    let n = g.num_vertices();
    assert!(n <= 16, "held_karp is for small graphs");
    let size = 1usize << n;
    let mut f = vec![f64::INFINITY; size * n];
    for a in g.out_arcs(g.source()) {
        f[(1 << a.to) * n + a.to] = a.cost;
    }
    let mut best: Option<f64> = None;
    for mask in 1..size {
        let k = mask.count_ones() as usize;
        if k > g.max_len() {
            continue;
        }
        for v in 0..n {
            let c = f[mask * n + v];
            if !c.is_finite() {
                continue;
            }
            best = Some(best.map_or(c, |b: f64| b.min(c)));
            if k == g.max_len() {
                continue;
            }
            for a in g.out_arcs(v) {
                if mask & (1 << a.to) != 0 {
                    continue;
                }
                let m2 = mask | (1 << a.to);
                let slot = &mut f[m2 * n + a.to];
                if c + a.cost < *slot {
                    *slot = c + a.cost;
                }
            }
        }
    }
    best
}

fn rat(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

/// Exact optimum of `max sum w_j x_j` s.t. every row is covered at most
/// once, `x >= 0`, by a dense tableau simplex in rational arithmetic with
/// Bland's rule.
pub fn rational_packing_lp(num_rows: usize, cols: &[(Vec<usize>, i64)]) -> BigRational {
    let m = num_rows;
    let nc = cols.len();
    let width = nc + m;
    // Row i: [A | I | b]; objective row holds reduced profits.
    let mut t: Vec<Vec<BigRational>> = vec![vec![BigRational::zero(); width + 1]; m];
    for (j, (rows, _)) in cols.iter().enumerate() {
        for &r in rows {
            t[r][j] = BigRational::one();
        }
    }
    for (i, row) in t.iter_mut().enumerate() {
        row[nc + i] = BigRational::one();
        row[width] = BigRational::one();
    }
    let mut obj: Vec<BigRational> = vec![BigRational::zero(); width + 1];
    for (j, (_, w)) in cols.iter().enumerate() {
        obj[j] = rat(*w);
    }
    let mut basis: Vec<usize> = (nc..width).collect();
    loop {
        let Some(enter) = (0..width).find(|&j| obj[j].is_positive()) else {
            break;
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = BigRational::zero();
        for i in 0..m {
            if t[i][enter].is_positive() {
                let r = &t[i][width] / &t[i][enter];
                let better = match leave {
                    None => true,
                    Some(l) => r < best_ratio || (r == best_ratio && basis[i] < basis[l]),
                };
                if better {
                    best_ratio = r;
                    leave = Some(i);
                }
            }
        }
        let r = leave.expect("packing LP is bounded");
        let piv = t[r][enter].clone();
        for x in t[r].iter_mut() {
            *x = &*x / &piv;
        }
        let prow = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && !row[enter].is_zero() {
                let f = row[enter].clone();
                for (x, p) in row.iter_mut().zip(&prow) {
                    *x = &*x - &f * p;
                }
            }
        }
        let f = obj[enter].clone();
        for (x, p) in obj.iter_mut().zip(&prow) {
            *x = &*x - &f * p;
        }
        basis[r] = enter;
    }
    -obj[width].clone()
}

pub fn to_f64(r: &BigRational) -> f64 {
    let num: f64 = r.numer().to_string().parse().unwrap();
    let den: f64 = r.denom().to_string().parse().unwrap();
    num / den
}

/// Maximum-weight vertex-disjoint packing by exhaustive search: the lowest
/// undecided vertex is either left out or covered by one exchange.
pub fn exhaustive_packing(n: usize, exchanges: &[(Vec<usize>, f64)]) -> f64 {
    let mut by_vertex: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, (vs, _)) in exchanges.iter().enumerate() {
        for &v in vs {
            by_vertex[v].push(k);
        }
    }
    fn rec(
        v: usize,
        used: &mut [bool],
        exchanges: &[(Vec<usize>, f64)],
        by_vertex: &[Vec<usize>],
    ) -> f64 {
        let n = used.len();
        let mut v = v;
        while v < n && used[v] {
            v += 1;
        }
        if v == n {
            return 0.0;
        }
        used[v] = true;
        let mut best = rec(v + 1, used, exchanges, by_vertex);
        used[v] = false;
        for &k in &by_vertex[v] {
            let (vs, w) = &exchanges[k];
            if vs.iter().any(|&u| used[u]) {
                continue;
            }
            for &u in vs {
                used[u] = true;
            }
            best = best.max(w + rec(v + 1, used, exchanges, by_vertex));
            for &u in vs {
                used[u] = false;
            }
        }
        best
    }
    rec(0, &mut vec![false; n], exchanges, &by_vertex)
}
