//! Exchanges (master-problem columns): canonical cycles and altruist-initiated
//! chains, their enumeration, reduced costs and prefix expansion.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{KepError, Result};
use crate::graph::DualVector;
use crate::instance::{CompatibilityInstance, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExchangeKind {
    Cycle,
    Chain,
}

/// A valid cycle (lowest id first) or a valid chain (altruist first).
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    kind: ExchangeKind,
    vertices: Vec<VertexId>,
    weight: f64,
}

/// Largest cycle size the enumerator accepts.
pub const MAX_ENUMERATED_CYCLE: usize = 4;

impl Exchange {
    /// Builds a cycle from any rotation of its vertex sequence.
    pub fn cycle(inst: &CompatibilityInstance, vertices: &[VertexId]) -> Result<Self> {
        if vertices.is_empty() {
            return Err(KepError::Validation("empty cycle".into()));
        }
        let start = vertices
            .iter()
            .enumerate()
            .min_by_key(|&(_, v)| *v)
            .map(|(i, _)| i)
            .unwrap();
        let mut rotated = vertices[start..].to_vec();
        rotated.extend_from_slice(&vertices[..start]);
        let e = Self {
            kind: ExchangeKind::Cycle,
            weight: 0.0,
            vertices: rotated,
        };
        e.with_weight(inst)
    }

    pub fn chain(inst: &CompatibilityInstance, vertices: &[VertexId]) -> Result<Self> {
        let e = Self {
            kind: ExchangeKind::Chain,
            weight: 0.0,
            vertices: vertices.to_vec(),
        };
        e.with_weight(inst)
    }

    fn with_weight(mut self, inst: &CompatibilityInstance) -> Result<Self> {
        self.weight = self.check(inst)?;
        Ok(self)
    }

    pub fn kind(&self) -> ExchangeKind {
        self.kind
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.vertices.contains(&v)
    }

    /// Arcs of the exchange, including the closing arc of a cycle.
    pub fn arcs(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        let closing = match self.kind {
            ExchangeKind::Cycle => Some((*self.vertices.last().unwrap(), self.vertices[0])),
            ExchangeKind::Chain => None,
        };
        self.vertices
            .windows(2)
            .map(|w| (w[0], w[1]))
            .chain(closing)
    }

    /// Checks every validity condition against `inst` and returns the
    /// recomputed weight.
    pub fn check(&self, inst: &CompatibilityInstance) -> Result<f64> {
        let n = inst.num_vertices();
        let vs = &self.vertices;
        if vs.iter().any(|v| v.index() >= n) {
            return Err(KepError::Validation(format!("{self} uses an unknown vertex")));
        }
        let mut sorted = vs.clone();
        sorted.sort();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(KepError::Validation(format!("{self} repeats a vertex")));
        }
        match self.kind {
            ExchangeKind::Cycle => {
                if vs.len() < 2 || vs.len() > inst.max_cycle() {
                    return Err(KepError::Validation(format!(
                        "cycle {self} has size outside [2, {}]",
                        inst.max_cycle()
                    )));
                }
                if vs[1..].iter().any(|&v| v < vs[0]) {
                    return Err(KepError::Validation(format!("cycle {self} is not canonical")));
                }
                if vs.iter().any(|&v| inst.is_altruist(v)) {
                    return Err(KepError::Validation(format!("cycle {self} uses an altruist")));
                }
            }
            ExchangeKind::Chain => {
                if vs.len() < 2 || vs.len() > inst.max_chain() {
                    return Err(KepError::Validation(format!(
                        "chain {self} has length outside [2, {}]",
                        inst.max_chain()
                    )));
                }
                if !inst.is_altruist(vs[0]) {
                    return Err(KepError::Validation(format!(
                        "chain {self} does not start at an altruist"
                    )));
                }
            }
        }
        let mut w = 0.0;
        for (u, v) in self.arcs() {
            w += inst.weight(u, v).ok_or_else(|| {
                KepError::Validation(format!("{self} uses missing arc ({u}, {v})"))
            })?;
        }
        Ok(w)
    }

    pub fn is_valid(&self, inst: &CompatibilityInstance) -> bool {
        self.check(inst).is_ok()
    }
}

impl fmt::Display for Exchange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.vertices.iter().map(|v| v.to_string()).collect();
        match self.kind {
            ExchangeKind::Cycle => write!(f, "cycle({})", body.join("-")),
            ExchangeKind::Chain => write!(f, "chain({})", body.join("-")),
        }
    }
}

/// All canonical valid cycles, in lexicographic order of their vertex lists.
pub fn enumerate_cycles(inst: &CompatibilityInstance) -> Result<Vec<Exchange>> {
    let k = inst.max_cycle();
    if k > MAX_ENUMERATED_CYCLE {
        return Err(KepError::Unsupported(format!(
            "cycle enumeration supports K <= {MAX_ENUMERATED_CYCLE}, got {k}"
        )));
    }
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(k);
    for start in inst.pairs() {
        stack.clear();
        stack.push((start, 0.0));
        extend_cycles(inst, k, &mut stack, &mut out);
    }
    Ok(out)
}

fn extend_cycles(
    inst: &CompatibilityInstance,
    k: usize,
    stack: &mut Vec<(VertexId, f64)>,
    out: &mut Vec<Exchange>,
) {
    let start = stack[0].0;
    let (last, w) = *stack.last().unwrap();
    for &(next, aw) in inst.successors(last) {
        if next == start && stack.len() >= 2 {
            out.push(Exchange {
                kind: ExchangeKind::Cycle,
                vertices: stack.iter().map(|&(v, _)| v).collect(),
                weight: w + aw,
            });
        } else if next > start && stack.len() < k && !stack.iter().any(|&(v, _)| v == next) {
            stack.push((next, w + aw));
            extend_cycles(inst, k, stack, out);
            stack.pop();
        }
    }
}

/// Every valid chain, in lexicographic order.
pub fn enumerate_chains(inst: &CompatibilityInstance, max_count: usize) -> Result<Vec<Exchange>> {
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(inst.max_chain());
    for a in inst.altruists() {
        stack.clear();
        stack.push((a, 0.0));
        extend_chains(inst, &mut stack, &mut out, max_count)?;
    }
    Ok(out)
}

fn extend_chains(
    inst: &CompatibilityInstance,
    stack: &mut Vec<(VertexId, f64)>,
    out: &mut Vec<Exchange>,
    max_count: usize,
) -> Result<()> {
    if stack.len() >= inst.max_chain() {
        return Ok(());
    }
    let (last, w) = *stack.last().unwrap();
    for &(next, aw) in inst.successors(last) {
        if stack.iter().any(|&(v, _)| v == next) {
            continue;
        }
        stack.push((next, w + aw));
        if out.len() >= max_count {
            return Err(KepError::SizeLimit(format!(
                "more than {max_count} chains; instance too large for full enumeration"
            )));
        }
        out.push(Exchange {
            kind: ExchangeKind::Chain,
            vertices: stack.iter().map(|&(v, _)| v).collect(),
            weight: w + aw,
        });
        extend_chains(inst, stack, out, max_count)?;
        stack.pop();
    }
    Ok(())
}

/// All cycles followed by all chains. Meant for small instances and tests;
/// fails once more than `max_count` exchanges would be produced.
pub fn enumerate_exchanges(
    inst: &CompatibilityInstance,
    max_count: usize,
) -> Result<Vec<Exchange>> {
    let mut all = enumerate_cycles(inst)?;
    if all.len() > max_count {
        return Err(KepError::SizeLimit(format!(
            "{} cycles exceed the limit of {max_count}",
            all.len()
        )));
    }
    let chains = enumerate_chains(inst, max_count - all.len())?;
    all.extend(chains);
    Ok(all)
}

/// `w_e - sum of duals over V(e)`.
pub fn reduced_cost(e: &Exchange, duals: &DualVector) -> f64 {
    e.weight() - e.vertices().iter().map(|&v| duals.get(v)).sum::<f64>()
}

/// Prefixes of a chain with 2..=len vertices, shortest first. The input chain
/// is the last element.
pub fn expand_subpaths(inst: &CompatibilityInstance, chain: &Exchange) -> Vec<Exchange> {
    debug_assert_eq!(chain.kind, ExchangeKind::Chain);
    let vs = chain.vertices();
    let mut out = Vec::with_capacity(vs.len().saturating_sub(1));
    let mut w = 0.0;
    for end in 2..=vs.len() {
        w += inst.weight(vs[end - 2], vs[end - 1]).unwrap_or(f64::NAN);
        out.push(Exchange {
            kind: ExchangeKind::Chain,
            vertices: vs[..end].to_vec(),
            weight: w,
        });
    }
    out
}
