//! The source-augmented pricing graph: dual-derived arc costs, hop
//! distances, distance-based preprocessing and extended neighborhoods.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{KepError, Result};
use crate::instance::{CompatibilityInstance, VertexId};

/// One dual value per vertex of the packing constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualVector {
    alpha: Vec<f64>,
}

impl DualVector {
    pub fn new(alpha: Vec<f64>) -> Self {
        Self { alpha }
    }

    pub fn zeros(n: usize) -> Self {
        Self::uniform(n, 0.0)
    }

    pub fn uniform(n: usize, value: f64) -> Self {
        Self {
            alpha: vec![value; n],
        }
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.alpha[v.index()]
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.alpha
    }

    pub fn sum(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// All-pairs hop distances over vertices `0..n` plus the source at index `n`.
/// Unreachable pairs hold [`HopTable::infinity`].
#[derive(Debug, Clone, PartialEq)]
pub struct HopTable {
    size: usize,
    dist: Vec<u32>,
}

impl HopTable {
    pub fn get(&self, from: usize, to: usize) -> u32 {
        self.dist[from * self.size + to]
    }

    /// Sentinel for "unreachable": one more than the number of real vertices,
    /// so it exceeds any achievable hop count.
    pub fn infinity(&self) -> u32 {
        self.size as u32
    }

    pub fn is_finite(&self, from: usize, to: usize) -> bool {
        self.get(from, to) < self.infinity()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingArc {
    /// Tail; equal to the source index for source arcs.
    pub from: usize,
    pub to: usize,
    pub cost: f64,
}

/// Extended neighborhoods `gamma(i)` and extended predecessors
/// `gamma_pred(i)`, as sorted vertex lists.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSets {
    pub gamma: Vec<Vec<usize>>,
    pub gamma_pred: Vec<Vec<usize>>,
}

impl ExtendedSets {
    pub fn in_gamma(&self, i: usize, j: usize) -> bool {
        self.gamma[i].binary_search(&j).is_ok()
    }
}

/// Digraph `G' = (V + s, A')` with reduced-cost arc weights. Real vertices are
/// `0..n`, the source is `n`.
#[derive(Debug, Clone)]
pub struct PricingGraph {
    n: usize,
    max_len: usize,
    arcs: Vec<PricingArc>,
    arc_alive: Vec<bool>,
    vertex_alive: Vec<bool>,
    /// Alive outgoing arc indices per tail (source included), sorted by head.
    out: Vec<Vec<usize>>,
    /// Alive incoming arc indices per head, sorted by tail.
    inc: Vec<Vec<usize>>,
    hop: HopTable,
    ext: ExtendedSets,
}

impl PricingGraph {
    /// Builds a graph from explicit costs. `source_arcs` lists `(altruist, cost)`.
    pub fn from_arcs(
        n: usize,
        source_arcs: &[(usize, f64)],
        arcs: &[(usize, usize, f64)],
        max_len: usize,
    ) -> Result<Self> {
        if max_len < 1 {
            return Err(KepError::Validation("length limit must be >= 1".into()));
        }
        let mut all = Vec::with_capacity(arcs.len() + source_arcs.len());
        for &(to, cost) in source_arcs {
            all.push(PricingArc { from: n, to, cost });
        }
        for &(from, to, cost) in arcs {
            if from >= n {
                return Err(KepError::Validation(format!("arc tail {from} out of range")));
            }
            all.push(PricingArc { from, to, cost });
        }
        for a in &all {
            if a.to >= n {
                return Err(KepError::Validation(format!("arc head {} out of range", a.to)));
            }
            if a.from == a.to {
                return Err(KepError::Validation(format!("self-loop on {}", a.to)));
            }
            if !a.cost.is_finite() {
                return Err(KepError::Validation(format!(
                    "arc ({}, {}) has non-finite cost",
                    a.from, a.to
                )));
            }
        }
        let mut g = Self {
            n,
            max_len,
            arc_alive: vec![true; all.len()],
            vertex_alive: vec![true; n],
            arcs: all,
            out: Vec::new(),
            inc: Vec::new(),
            hop: HopTable {
                size: n + 1,
                dist: Vec::new(),
            },
            ext: ExtendedSets {
                gamma: Vec::new(),
                gamma_pred: Vec::new(),
            },
        };
        g.rebuild_adjacency()?;
        g.refresh_distances();
        Ok(g)
    }

    fn rebuild_adjacency(&mut self) -> Result<()> {
        let n = self.n;
        let mut out = vec![Vec::new(); n + 1];
        let mut inc = vec![Vec::new(); n];
        for (idx, a) in self.arcs.iter().enumerate() {
            if self.arc_alive[idx] {
                out[a.from].push(idx);
                inc[a.to].push(idx);
            }
        }
        let arcs = &self.arcs;
        for list in &mut out {
            list.sort_by_key(|&i| arcs[i].to);
            if list.windows(2).any(|w| arcs[w[0]].to == arcs[w[1]].to) {
                return Err(KepError::Validation("duplicate pricing arc".into()));
            }
        }
        for list in &mut inc {
            list.sort_by_key(|&i| arcs[i].from);
        }
        self.out = out;
        self.inc = inc;
        Ok(())
    }

    fn refresh_distances(&mut self) {
        self.hop = compute_hop_distances(self);
        self.ext = compute_extended_sets(self);
    }

    /// Number of real vertices (the source index).
    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn source(&self) -> usize {
        self.n
    }

    /// Maximum number of arcs on a path from the source.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn arcs(&self) -> &[PricingArc] {
        &self.arcs
    }

    pub fn is_arc_alive(&self, idx: usize) -> bool {
        self.arc_alive[idx]
    }

    pub fn is_vertex_alive(&self, v: usize) -> bool {
        v == self.n || self.vertex_alive[v]
    }

    pub fn alive_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(|&v| self.vertex_alive[v])
    }

    pub fn num_alive_arcs(&self) -> usize {
        self.arc_alive.iter().filter(|&&a| a).count()
    }

    /// Alive arcs leaving `v` (use [`Self::source`] for source arcs), by head.
    pub fn out_arcs(&self, v: usize) -> impl Iterator<Item = &PricingArc> + '_ {
        self.out[v].iter().map(move |&i| &self.arcs[i])
    }

    /// Alive arcs entering `v`, by tail; the source arc, if any, comes last.
    pub fn in_arcs(&self, v: usize) -> impl Iterator<Item = &PricingArc> + '_ {
        self.inc[v].iter().map(move |&i| &self.arcs[i])
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out[v].len()
    }

    /// Cost of the alive arc `(u, v)`, if present.
    pub fn cost(&self, u: usize, v: usize) -> Option<f64> {
        let list = &self.out[u];
        list.binary_search_by_key(&v, |&i| self.arcs[i].to)
            .ok()
            .map(|k| self.arcs[list[k]].cost)
    }

    pub fn hop(&self) -> &HopTable {
        &self.hop
    }

    pub fn hop_dist(&self, from: usize, to: usize) -> u32 {
        self.hop.get(from, to)
    }

    pub fn extended(&self) -> &ExtendedSets {
        &self.ext
    }

    pub fn gamma(&self, i: usize) -> &[usize] {
        &self.ext.gamma[i]
    }

    pub fn gamma_pred(&self, i: usize) -> &[usize] {
        &self.ext.gamma_pred[i]
    }

    /// Cost of the path `(s, path...)` if every arc is alive.
    pub fn path_cost(&self, path: &[usize]) -> Option<f64> {
        let mut prev = self.n;
        let mut c = 0.0;
        for &v in path {
            c += self.cost(prev, v)?;
            prev = v;
        }
        Some(c)
    }

    /// Whether `(s, path...)` is an elementary path of 1..=L arcs over alive
    /// arcs.
    pub fn is_valid_path(&self, path: &[usize]) -> bool {
        if path.is_empty() || path.len() > self.max_len {
            return false;
        }
        let mut seen = vec![false; self.n];
        for &v in path {
            if v >= self.n || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        self.path_cost(path).is_some()
    }

    /// Recomputes every arc cost from new duals; topology is unchanged.
    pub fn reprice(&mut self, inst: &CompatibilityInstance, duals: &DualVector) -> Result<()> {
        check_duals(inst, duals)?;
        let alpha = duals.as_slice();
        for a in &mut self.arcs {
            a.cost = if a.from == self.n {
                alpha[a.to]
            } else {
                let w = inst
                    .weight(VertexId::from(a.from), VertexId::from(a.to))
                    .expect("pricing arc mirrors an instance arc");
                -w + alpha[a.to]
            };
        }
        Ok(())
    }

    /// Overwrites arc costs; `costs` is indexed like [`Self::arcs`].
    pub fn set_costs(&mut self, costs: &[f64]) {
        assert_eq!(costs.len(), self.arcs.len());
        for (a, &c) in self.arcs.iter_mut().zip(costs) {
            a.cost = c;
        }
    }
}

fn check_duals(inst: &CompatibilityInstance, duals: &DualVector) -> Result<()> {
    if duals.len() != inst.num_vertices() {
        return Err(KepError::Validation(format!(
            "dual vector has {} entries for {} vertices",
            duals.len(),
            inst.num_vertices()
        )));
    }
    if duals.as_slice().iter().any(|a| !a.is_finite()) {
        return Err(KepError::Validation("non-finite dual value".into()));
    }
    Ok(())
}

/// Pricing graph with `c_uv = -w_uv + alpha_v` on compatibility arcs and
/// `c_su = alpha_u` on the source arc of each altruist `u`. The length limit
/// is the instance's chain limit L.
pub fn build_pricing_graph(
    inst: &CompatibilityInstance,
    duals: &DualVector,
) -> Result<PricingGraph> {
    check_duals(inst, duals)?;
    let alpha = duals.as_slice();
    let source_arcs: Vec<(usize, f64)> =
        inst.altruists().map(|u| (u.index(), alpha[u.index()])).collect();
    let arcs: Vec<(usize, usize, f64)> = inst
        .arcs()
        .iter()
        .map(|a| (a.from.index(), a.to.index(), -a.weight + alpha[a.to.index()]))
        .collect();
    PricingGraph::from_arcs(inst.num_vertices(), &source_arcs, &arcs, inst.max_chain())
}

/// One BFS per vertex over alive arcs.
pub fn compute_hop_distances(g: &PricingGraph) -> HopTable {
    let size = g.n + 1;
    let inf = size as u32;
    let mut dist = vec![inf; size * size];
    let mut queue = VecDeque::new();
    for start in 0..size {
        if !g.is_vertex_alive(start) {
            dist[start * size + start] = 0;
            continue;
        }
        let row = &mut dist[start * size..(start + 1) * size];
        row[start] = 0;
        queue.clear();
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            let du = row[u];
            for &ai in &g.out[u] {
                let v = g.arcs[ai].to;
                if row[v] == inf {
                    row[v] = du + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    HopTable { size, dist }
}

/// Removes every vertex farther than L hops from the source and every arc
/// whose tail is at distance L or more.
pub fn preprocess(g: &PricingGraph) -> PricingGraph {
    let mut out = g.clone();
    let s = g.n;
    let limit = g.max_len as u32;
    for v in 0..g.n {
        if g.hop.get(s, v) > limit {
            out.vertex_alive[v] = false;
        }
    }
    for (idx, a) in g.arcs.iter().enumerate() {
        let ds = g.hop.get(s, a.from);
        if ds >= g.hop.infinity() || ds + 1 > limit {
            out.arc_alive[idx] = false;
        }
    }
    out.rebuild_adjacency()
        .expect("removing arcs cannot create duplicates");
    out.refresh_distances();
    out
}

/// `gamma(i) = {j : d(s,i)+d(i,j) <= L or d(s,j)+d(j,i) <= L}` and
/// `gamma_pred(i) = {j : d(s,j)+d(j,i) <= L}` over alive vertices.
pub fn compute_extended_sets(g: &PricingGraph) -> ExtendedSets {
    let n = g.n;
    let s = g.n;
    let limit = g.max_len as u64;
    let hop = &g.hop;
    let d = |a: usize, b: usize| -> u64 { hop.get(a, b) as u64 };
    let mut gamma = vec![Vec::new(); n];
    let mut gamma_pred = vec![Vec::new(); n];
    let alive: Vec<usize> = g.alive_vertices().collect();
    for &i in &alive {
        for &j in &alive {
            let forward = d(s, i) + d(i, j) <= limit;
            let backward = d(s, j) + d(j, i) <= limit;
            if forward || backward {
                gamma[i].push(j);
            }
            if backward {
                gamma_pred[i].push(j);
            }
        }
    }
    ExtendedSets { gamma, gamma_pred }
}
