//! Labeling DP over ng-paths, in either direction, with optional pruning by
//! completion bounds against the upper bound 0.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use super::{NgSets, MAX_MEMORY};
use crate::error::{KepError, Result};
use crate::graph::PricingGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Labels are paths from the source; length counts arcs from `s`.
    Forward,
    /// Labels are paths ending anywhere, grown backwards; length counts arcs
    /// not including the source arc that will close them.
    Backward,
}

impl Direction {
    pub fn opposite(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }
}

/// Cheapest label cost per `(length, vertex)` of one DP run.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMins {
    pub direction: Direction,
    n: usize,
    max_len: usize,
    min: Vec<f64>,
}

impl LabelMins {
    fn new(direction: Direction, n: usize, max_len: usize) -> Self {
        Self {
            direction,
            n,
            max_len,
            min: vec![f64::INFINITY; (max_len + 1) * n],
        }
    }

    pub fn get(&self, len: usize, v: usize) -> f64 {
        self.min[len * self.n + v]
    }

    fn lower(&mut self, len: usize, v: usize, c: f64) {
        let slot = &mut self.min[len * self.n + v];
        if c < *slot {
            *slot = c;
        }
    }

    /// Completion bound for a label of the other direction at `(len, v)`.
    fn completion_table(&self) -> Vec<f64> {
        let (n, l) = (self.n, self.max_len);
        let mut cb = vec![f64::INFINITY; (l + 1) * n];
        for v in 0..n {
            match self.direction {
                // A forward label of length `len` may continue with a backward
                // label of length `k <= L - len` (`k = 0` stops here).
                Direction::Backward => {
                    let mut best = f64::INFINITY;
                    for len in (0..=l).rev() {
                        best = best.min(self.get(l - len, v));
                        cb[len * n + v] = best;
                    }
                }
                // A backward label of length `k` needs a forward prefix of
                // `1..=L-k` arcs ending at `v`.
                Direction::Forward => {
                    let mut best = f64::INFINITY;
                    for k in (0..l).rev() {
                        best = best.min(self.get(l - k, v));
                        cb[k * n + v] = best;
                    }
                }
            }
        }
        cb
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NgDpConfig {
    pub direction: Direction,
    /// Drop labels dominated by a label with a subset memory and lower cost.
    pub dominance: bool,
    /// Safety cap on the number of labels created.
    pub max_labels: usize,
}

impl Default for NgDpConfig {
    fn default() -> Self {
        Self {
            direction: Direction::Forward,
            dominance: true,
            max_labels: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgDpResult {
    /// Lower bound on the elementary optimum. With completion bounds it is
    /// `min(0, ...)`: only negative optima are bounded tightly.
    pub bound: f64,
    /// Walk achieving `bound`, source implicit; absent when nothing reaches it.
    pub path: Option<Vec<usize>>,
    pub elementary: bool,
    pub label_mins: LabelMins,
    pub labels_created: usize,
    pub labels_pruned: usize,
}

#[derive(Debug, Clone, Copy)]
struct Label {
    mask: u64,
    cost: f64,
    pred: u32,
    vertex: u32,
    alive: bool,
}

const NO_PRED: u32 = u32::MAX;

/// Local bit layout of every memory set plus, per arc, how bits carry over.
struct Memory {
    /// Bit of vertex `i` in its own memory.
    self_bit: Vec<u64>,
    /// For an arc from `a` to `b` (in DP order): mask of bits of `a` that
    /// mean "b already visited", and the bit map into `b`'s layout.
    carry: FxHashMap<(u32, u32), (u64, Vec<(u8, u8)>)>,
}

impl Memory {
    fn new(g: &PricingGraph, sets: &NgSets, dir: Direction) -> Result<Self> {
        let n = g.num_vertices();
        if sets.num_vertices() != n {
            return Err(KepError::Validation(format!(
                "ng-sets cover {} vertices, graph has {n}",
                sets.num_vertices()
            )));
        }
        let mut self_bit = vec![0u64; n];
        for i in 0..n {
            let eta = sets.eta(i);
            if eta.len() > MAX_MEMORY {
                return Err(KepError::Unsupported(format!(
                    "memory of vertex {i} has {} entries (max {MAX_MEMORY})",
                    eta.len()
                )));
            }
            self_bit[i] = 1u64 << eta.binary_search(&i).expect("i in eta_i");
        }
        let mut carry = FxHashMap::default();
        for a in g.arcs().iter().enumerate().filter(|(k, _)| g.is_arc_alive(*k)) {
            let a = a.1;
            if a.from == g.source() {
                continue;
            }
            let (from, to) = match dir {
                Direction::Forward => (a.from, a.to),
                Direction::Backward => (a.to, a.from),
            };
            let src = sets.eta(from);
            let dst = sets.eta(to);
            let block = src
                .binary_search(&to)
                .map_or(0, |b| 1u64 << b);
            let mut map = Vec::new();
            for (bi, v) in src.iter().enumerate() {
                if let Ok(bj) = dst.binary_search(v) {
                    map.push((bi as u8, bj as u8));
                }
            }
            carry.insert((from as u32, to as u32), (block, map));
        }
        Ok(Self { self_bit, carry })
    }

    fn extend(&self, mask: u64, from: usize, to: usize) -> Option<u64> {
        let (block, map) = &self.carry[&(from as u32, to as u32)];
        if mask & block != 0 {
            return None;
        }
        let mut out = self.self_bit[to];
        for &(bi, bj) in map {
            if mask >> bi & 1 == 1 {
                out |= 1u64 << bj;
            }
        }
        Some(out)
    }
}

/// Label buckets indexed by `(length, vertex)`.
struct Buckets {
    n: usize,
    ids: Vec<Vec<u32>>,
    by_mask: Vec<FxHashMap<u64, u32>>,
}

impl Buckets {
    fn new(n: usize, max_len: usize) -> Self {
        let slots = (max_len + 1) * n;
        Self {
            n,
            ids: vec![Vec::new(); slots],
            by_mask: vec![FxHashMap::default(); slots],
        }
    }
}

/// Inserts a label, merging equal memories and applying dominance. Returns
/// whether the label was kept.
fn insert(
    labels: &mut Vec<Label>,
    buckets: &mut Buckets,
    len: usize,
    label: Label,
    dominance: bool,
) -> bool {
    let slot = len * buckets.n + label.vertex as usize;
    if let Some(&id) = buckets.by_mask[slot].get(&label.mask) {
        let old = &mut labels[id as usize];
        if old.alive && label.cost < old.cost {
            old.cost = label.cost;
            old.pred = label.pred;
            return true;
        }
        if old.alive {
            return false;
        }
    }
    if dominance {
        for &id in &buckets.ids[slot] {
            let o = &labels[id as usize];
            if o.alive && o.mask & label.mask == o.mask && o.cost <= label.cost {
                return false;
            }
        }
        for &id in &buckets.ids[slot] {
            let o = &mut labels[id as usize];
            if o.alive && o.mask & label.mask == label.mask && label.cost <= o.cost {
                o.alive = false;
            }
        }
    }
    let id = labels.len() as u32;
    labels.push(label);
    buckets.ids[slot].push(id);
    buckets.by_mask[slot].insert(label.mask, id);
    true
}

/// Runs the ng labeling DP with the given memories. `completion` carries the
/// label minima of a previous run in the opposite direction; labels whose
/// cost plus completion bound exceeds 0 are dropped.
pub fn ng_dp(
    g: &PricingGraph,
    sets: &NgSets,
    completion: Option<&LabelMins>,
    cfg: &NgDpConfig,
) -> Result<NgDpResult> {
    let dir = cfg.direction;
    let n = g.num_vertices();
    let l_max = g.max_len();
    let s = g.source();
    if let Some(c) = completion {
        if c.direction != dir.opposite() || c.n != n || c.max_len != l_max {
            return Err(KepError::Validation(
                "completion bounds do not match this DP".into(),
            ));
        }
    }
    let cb = completion.map(LabelMins::completion_table);
    let mem = Memory::new(g, sets, dir)?;
    let mut labels: Vec<Label> = Vec::new();
    let mut buckets = Buckets::new(n, l_max);
    let mut mins = LabelMins::new(dir, n, l_max);
    let mut pruned = 0usize;

    // Forward labels have 1..=L arcs; backward labels have 0..L arcs.
    let (first_len, last_len) = match dir {
        Direction::Forward => (1, l_max),
        Direction::Backward => (0, l_max - 1),
    };
    let keep = |len: usize, v: usize, cost: f64| -> bool {
        cb.as_ref().map_or(true, |t| cost + t[len * n + v] <= 0.0)
    };

    match dir {
        Direction::Forward => {
            for a in g.out_arcs(s) {
                if keep(1, a.to, a.cost) {
                    let lab = Label {
                        mask: mem.self_bit[a.to],
                        cost: a.cost,
                        pred: NO_PRED,
                        vertex: a.to as u32,
                        alive: true,
                    };
                    insert(&mut labels, &mut buckets, 1, lab, cfg.dominance);
                } else {
                    pruned += 1;
                }
            }
        }
        Direction::Backward => {
            for v in g.alive_vertices() {
                if keep(0, v, 0.0) {
                    let lab = Label {
                        mask: mem.self_bit[v],
                        cost: 0.0,
                        pred: NO_PRED,
                        vertex: v as u32,
                        alive: true,
                    };
                    insert(&mut labels, &mut buckets, 0, lab, cfg.dominance);
                } else {
                    pruned += 1;
                }
            }
        }
    }

    for len in first_len..=last_len {
        for v in 0..n {
            let slot = len * n + v;
            let ids = std::mem::take(&mut buckets.ids[slot]);
            for &id in &ids {
                let lab = labels[id as usize];
                if !lab.alive {
                    continue;
                }
                mins.lower(len, v, lab.cost);
                if len == last_len {
                    continue;
                }
                let next: Box<dyn Iterator<Item = (usize, f64)>> = match dir {
                    Direction::Forward => Box::new(g.out_arcs(v).map(|a| (a.to, a.cost))),
                    Direction::Backward => Box::new(
                        g.in_arcs(v)
                            .filter(|a| a.from != s)
                            .map(|a| (a.from, a.cost)),
                    ),
                };
                for (w, c) in next {
                    let Some(mask) = mem.extend(lab.mask, v, w) else {
                        continue;
                    };
                    let cost = lab.cost + c;
                    if !keep(len + 1, w, cost) {
                        pruned += 1;
                        continue;
                    }
                    let new = Label {
                        mask,
                        cost,
                        pred: id,
                        vertex: w as u32,
                        alive: true,
                    };
                    insert(&mut labels, &mut buckets, len + 1, new, cfg.dominance);
                    if labels.len() > cfg.max_labels {
                        return Err(KepError::SizeLimit(format!(
                            "ng DP exceeded {} labels",
                            cfg.max_labels
                        )));
                    }
                }
            }
            buckets.ids[slot] = ids;
        }
    }

    // Best complete path.
    let mut best: Option<(f64, u32)> = None;
    for len in first_len..=last_len {
        for v in 0..n {
            let close = match dir {
                Direction::Forward => Some(0.0),
                Direction::Backward => g.cost(s, v),
            };
            let Some(close) = close else { continue };
            for &id in &buckets.ids[len * n + v] {
                let lab = &labels[id as usize];
                if !lab.alive {
                    continue;
                }
                let total = lab.cost + close;
                if best.map_or(true, |(b, _)| total < b) {
                    best = Some((total, id));
                }
            }
        }
    }
    let mut path = best.map(|(_, id)| {
        let mut walk = Vec::new();
        let mut cur = id;
        while cur != NO_PRED {
            walk.push(labels[cur as usize].vertex as usize);
            cur = labels[cur as usize].pred;
        }
        if dir == Direction::Forward {
            walk.reverse();
        }
        walk
    });
    let mut bound = best.map_or(f64::INFINITY, |(b, _)| b);
    if cb.is_some() {
        // Pruning only preserves paths of negative cost.
        if bound > 0.0 {
            bound = 0.0;
            path = None;
        }
    } else if path.is_none() {
        bound = 0.0;
    }
    let elementary = path.as_ref().map_or(true, |p| is_elementary(p));
    Ok(NgDpResult {
        bound,
        path,
        elementary,
        label_mins: mins,
        labels_created: labels.len(),
        labels_pruned: pruned,
    })
}

pub(crate) fn is_elementary(walk: &[usize]) -> bool {
    let mut seen: Vec<usize> = walk.to_vec();
    seen.sort_unstable();
    seen.windows(2).all(|w| w[0] != w[1])
}
