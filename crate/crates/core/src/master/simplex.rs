//! Primal revised simplex for packing LPs `max c'x, Ax <= 1, x >= 0` with
//! 0/1 columns. The basis inverse is kept dense and updated in product form,
//! with periodic refactorization.

use crate::error::{KepError, Result};

const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_STREAK: usize = 50;

#[derive(Debug, Clone)]
pub(crate) struct Simplex {
    m: usize,
    /// Rows covered by each structural column.
    cols: Vec<Vec<u32>>,
    cost: Vec<f64>,
    /// Basic variable of each row: `< m` is a slack, `m + k` is column `k`.
    basis: Vec<usize>,
    /// Row of each basic variable, `usize::MAX` when nonbasic.
    row_of: Vec<usize>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    since_refactor: usize,
    pub pivots: usize,
}

impl Simplex {
    pub fn new(m: usize) -> Self {
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        Self {
            m,
            cols: Vec::new(),
            cost: Vec::new(),
            basis: (0..m).collect(),
            row_of: (0..m).collect(),
            binv,
            xb: vec![1.0; m],
            since_refactor: 0,
            pivots: 0,
        }
    }

    /// Appends a nonbasic column; the current basis stays feasible.
    pub fn add_column(&mut self, rows: Vec<u32>, cost: f64) {
        debug_assert!(rows.iter().all(|&r| (r as usize) < self.m));
        self.cols.push(rows);
        self.cost.push(cost);
        self.row_of.push(usize::MAX);
    }

    fn var_cost(&self, var: usize) -> f64 {
        if var < self.m {
            0.0
        } else {
            self.cost[var - self.m]
        }
    }

    fn duals_raw(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &var) in self.basis.iter().enumerate() {
            let c = self.var_cost(var);
            if c != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, b) in y.iter_mut().zip(row) {
                    *yi += c * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, var: usize, y: &[f64]) -> f64 {
        if var < self.m {
            -y[var]
        } else {
            let k = var - self.m;
            self.cost[k] - self.cols[k].iter().map(|&r| y[r as usize]).sum::<f64>()
        }
    }

    fn ftran(&self, var: usize) -> Vec<f64> {
        let m = self.m;
        let mut u = vec![0.0; m];
        if var < m {
            for (r, ur) in u.iter_mut().enumerate() {
                *ur = self.binv[r * m + var];
            }
        } else {
            for &i in &self.cols[var - m] {
                let i = i as usize;
                for (r, ur) in u.iter_mut().enumerate() {
                    *ur += self.binv[r * m + i];
                }
            }
        }
        u
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut b = vec![0.0f64; m * m];
        for (r, &var) in self.basis.iter().enumerate() {
            if var < m {
                b[var * m + r] = 1.0;
            } else {
                for &i in &self.cols[var - m] {
                    b[i as usize * m + r] = 1.0;
                }
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        // Gauss-Jordan with partial pivoting.
        for col in 0..m {
            let (p, best) = (col..m)
                .map(|r| (r, b[r * m + col].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty");
            if best < 1e-12 {
                return Err(KepError::Solver(format!(
                    "singular basis during refactorization (column {col}, pivot {best:.3e})"
                )));
            }
            if p != col {
                for k in 0..m {
                    b.swap(p * m + k, col * m + k);
                    inv.swap(p * m + k, col * m + k);
                }
            }
            let piv = b[col * m + col];
            for k in 0..m {
                b[col * m + k] /= piv;
                inv[col * m + k] /= piv;
            }
            for r in 0..m {
                if r != col {
                    let f = b[r * m + col];
                    if f != 0.0 {
                        for k in 0..m {
                            b[r * m + k] -= f * b[col * m + k];
                            inv[r * m + k] -= f * inv[col * m + k];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        for r in 0..m {
            let x: f64 = self.binv[r * m..(r + 1) * m].iter().sum();
            if x < -1e-7 {
                return Err(KepError::Solver(format!(
                    "basis lost primal feasibility (row {r}, value {x:.3e})"
                )));
            }
            self.xb[r] = x.max(0.0);
        }
        self.since_refactor = 0;
        Ok(())
    }

    /// Runs primal simplex from the current basis to optimality.
    pub fn solve(&mut self) -> Result<()> {
        let m = self.m;
        let nvars = m + self.cols.len();
        let max_pivots = 50_000 + 50 * nvars;
        let mut degenerate = 0usize;
        let mut start_pivots = 0usize;
        loop {
            let y = self.duals_raw();
            let bland = degenerate >= DEGENERATE_STREAK;
            let mut enter = None;
            let mut best = OPT_TOL;
            for var in 0..nvars {
                if self.row_of[var] != usize::MAX {
                    continue;
                }
                let d = self.reduced_cost(var, &y);
                if d > best {
                    enter = Some(var);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = enter else {
                return Ok(());
            };
            let u = self.ftran(q);
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                if u[r] <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.xb[r] / u[r];
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let better = if ratio < lratio - 1e-12 {
                            true
                        } else if ratio <= lratio + 1e-12 {
                            if bland {
                                self.basis[r] < self.basis[lr]
                            } else {
                                u[r] > u[lr]
                            }
                        } else {
                            false
                        };
                        if better {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((p, theta)) = leave else {
                return Err(KepError::Solver("packing LP reported unbounded".into()));
            };
            let theta = theta.max(0.0);
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            for r in 0..m {
                if r != p {
                    self.xb[r] = (self.xb[r] - theta * u[r]).max(0.0);
                }
            }
            self.xb[p] = theta;
            let piv = u[p];
            for k in 0..m {
                self.binv[p * m + k] /= piv;
            }
            let (before, rest) = self.binv.split_at_mut(p * m);
            let (prow, after) = rest.split_at_mut(m);
            for (r, row) in before
                .chunks_mut(m)
                .enumerate()
                .chain(after.chunks_mut(m).enumerate().map(|(i, c)| (i + p + 1, c)))
            {
                let f = u[r];
                if f != 0.0 {
                    for (x, pv) in row.iter_mut().zip(prow.iter()) {
                        *x -= f * pv;
                    }
                }
            }
            let old = self.basis[p];
            self.row_of[old] = usize::MAX;
            self.basis[p] = q;
            self.row_of[q] = p;
            self.pivots += 1;
            start_pivots += 1;
            self.since_refactor += 1;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor()?;
            }
            if start_pivots > max_pivots {
                return Err(KepError::Solver(format!(
                    "simplex exceeded {max_pivots} pivots ({m} rows, {nvars} variables)"
                )));
            }
        }
    }

    pub fn value(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .map(|(&var, &x)| self.var_cost(var) * x)
            .sum()
    }

    /// Structural primal values, clamped to `[0, 1]`.
    pub fn primal(&self) -> Vec<f64> {
        (0..self.cols.len())
            .map(|k| match self.row_of[self.m + k] {
                usize::MAX => 0.0,
                r => self.xb[r].clamp(0.0, 1.0),
            })
            .collect()
    }

    /// Row duals, clamped at zero.
    pub fn duals(&self) -> Vec<f64> {
        self.duals_raw().into_iter().map(|y| y.max(0.0)).collect()
    }
}
