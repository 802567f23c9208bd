//! Restricted master problem: the packing LP over the column pool, its
//! duals, the Lagrangian upper bound, and the final integer solve.

mod bnb;
mod simplex;

use rustc_hash::FxHashMap;

use crate::error::{KepError, Result};
use crate::exchange::{expand_subpaths, Exchange, ExchangeKind};
use crate::graph::DualVector;
use crate::instance::{CompatibilityInstance, VertexId};
use simplex::Simplex;

pub use bnb::{solve_restricted_ip, IpOutcome};

/// Primal values within this distance of 0 or 1 count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-9;

/// The column pool and the LP over it.
#[derive(Debug, Clone)]
pub struct RestrictedMaster {
    num_vertices: usize,
    columns: Vec<Exchange>,
    index: FxHashMap<(ExchangeKind, Vec<VertexId>), usize>,
    coverage: Vec<Vec<usize>>,
    lp: Simplex,
    lp_value: f64,
    primal: Vec<f64>,
    duals: DualVector,
}

/// Optimal LP solution of the restricted master.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub primal: Vec<f64>,
    pub duals: DualVector,
}

impl RestrictedMaster {
    pub fn new(num_vertices: usize) -> Self {
        Self {
            num_vertices,
            columns: Vec::new(),
            index: FxHashMap::default(),
            coverage: vec![Vec::new(); num_vertices],
            lp: Simplex::new(num_vertices),
            lp_value: 0.0,
            primal: Vec::new(),
            duals: DualVector::zeros(num_vertices),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Columns in insertion order; the position is the column id.
    pub fn columns(&self) -> &[Exchange] {
        &self.columns
    }

    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    /// Ids of the columns covering `v`.
    pub fn coverage(&self, v: VertexId) -> &[usize] {
        &self.coverage[v.index()]
    }

    pub fn contains(&self, e: &Exchange) -> bool {
        self.index
            .contains_key(&(e.kind(), e.vertices().to_vec()))
    }

    /// Inserts a column unless an equal one is pooled. No validity check.
    pub fn insert(&mut self, e: Exchange) -> bool {
        let key = (e.kind(), e.vertices().to_vec());
        if self.index.contains_key(&key) {
            return false;
        }
        let id = self.columns.len();
        let mut rows: Vec<u32> = e.vertices().iter().map(|v| v.0).collect();
        rows.sort_unstable();
        for &r in &rows {
            self.coverage[r as usize].push(id);
        }
        self.lp.add_column(rows, e.weight());
        self.index.insert(key, id);
        self.columns.push(e);
        true
    }

    /// LP value of the last solve.
    pub fn lp_value(&self) -> f64 {
        self.lp_value
    }

    /// Column values of the last solve; columns added since are 0.
    pub fn primal(&self) -> Vec<f64> {
        let mut x = self.primal.clone();
        x.resize(self.columns.len(), 0.0);
        x
    }

    pub fn duals(&self) -> &DualVector {
        &self.duals
    }

    pub fn is_integral(&self) -> bool {
        self.primal
            .iter()
            .all(|&x| x <= INTEGRALITY_TOL || x >= 1.0 - INTEGRALITY_TOL)
    }

    /// Columns at value 1 in the last LP solution.
    pub fn integral_support(&self) -> Vec<usize> {
        (0..self.primal.len())
            .filter(|&k| self.primal[k] >= 1.0 - INTEGRALITY_TOL)
            .collect()
    }
}

/// Adds `e` (checked against `inst`) and, for chains with `expand`, all its
/// prefixes. Returns the number of new columns.
pub fn add_column(
    master: &mut RestrictedMaster,
    inst: &CompatibilityInstance,
    e: Exchange,
    expand: bool,
) -> Result<usize> {
    if inst.num_vertices() != master.num_vertices {
        return Err(KepError::Validation(format!(
            "instance has {} vertices, master has {}",
            inst.num_vertices(),
            master.num_vertices
        )));
    }
    let w = e.check(inst)?;
    if (w - e.weight()).abs() > 1e-9 * (1.0 + w.abs()) {
        return Err(KepError::Validation(format!(
            "exchange {e} stores weight {} but its arcs sum to {w}",
            e.weight()
        )));
    }
    let batch = if expand && e.kind() == ExchangeKind::Chain {
        expand_subpaths(inst, &e)
    } else {
        vec![e]
    };
    Ok(batch.into_iter().filter(|c| master.insert(c.clone())).count())
}

/// Solves the LP over the current pool, warm-started from the previous basis.
pub fn solve_rmp(master: &mut RestrictedMaster) -> Result<LpSolution> {
    master.lp.solve()?;
    master.lp_value = master.lp.value();
    master.primal = master.lp.primal();
    master.duals = DualVector::new(master.lp.duals());
    Ok(LpSolution {
        value: master.lp_value,
        primal: master.primal.clone(),
        duals: master.duals.clone(),
    })
}

/// Upper bound on the full LP from the restricted value `z_bar` and an upper
/// bound `max_rc` on every reduced cost: at most `|V|/2` exchanges can be
/// active, each improving the objective by at most `max_rc`.
pub fn lagrangian_ub(z_bar: f64, max_rc: f64, num_vertices: usize) -> f64 {
    z_bar + num_vertices as f64 / 2.0 * max_rc.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::enumerate_exchanges;
    use crate::instance::fixture_g1;

    fn ids(v: &[u32]) -> Vec<VertexId> {
        v.iter().map(|&x| VertexId(x)).collect()
    }

    #[test]
    fn g1_full_pool() {
        let inst = fixture_g1();
        let mut m = RestrictedMaster::new(7);
        for e in enumerate_exchanges(&inst, 1000).unwrap() {
            assert_eq!(add_column(&mut m, &inst, e, false).unwrap(), 1);
        }
        let lp = solve_rmp(&mut m).unwrap();
        assert!((lp.value - 5.0).abs() < 1e-9);
        let obj: f64 = m.columns().iter().zip(&lp.primal).map(|(e, x)| e.weight() * x).sum();
        assert!((obj - lp.value).abs() < 1e-9);
        for e in m.columns() {
            let rc = crate::exchange::reduced_cost(e, &lp.duals);
            assert!(rc <= 1e-9);
        }
    }

    #[test]
    fn empty_pool() {
        let mut m = RestrictedMaster::new(3);
        let lp = solve_rmp(&mut m).unwrap();
        assert_eq!(lp.value, 0.0);
        assert_eq!(lp.duals, DualVector::zeros(3));
    }

    #[test]
    fn subpath_expansion_and_duplicates() {
        let inst = fixture_g1();
        let mut m = RestrictedMaster::new(7);
        let chain = Exchange::chain(&inst, &ids(&[0, 2, 4, 6])).unwrap();
        assert_eq!(add_column(&mut m, &inst, chain.clone(), true).unwrap(), 3);
        assert_eq!(add_column(&mut m, &inst, chain, true).unwrap(), 0);
        let before = solve_rmp(&mut m).unwrap().value;
        let cyc = Exchange::cycle(&inst, &ids(&[3, 5])).unwrap();
        assert_eq!(add_column(&mut m, &inst, cyc, true).unwrap(), 1);
        let after = solve_rmp(&mut m).unwrap().value;
        assert!(after >= before);
        assert!((after - 5.0).abs() < 1e-9);
    }

    #[test]
    fn lagrangian_formula() {
        assert_eq!(lagrangian_ub(5.0, -1.0, 7), 5.0);
        assert!((lagrangian_ub(5.0, 0.4, 7) - 6.4).abs() < 1e-12);
    }
}
