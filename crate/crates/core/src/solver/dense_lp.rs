//! Two-phase dense tableau simplex with Bland's rule, for the small
//! Lipschitz-type linear programs (a few hundred rows/columns). Maximizes
//! `c·x` over equality/inequality rows with nonnegative or free variables.

use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const RHS_TOL: f64 = 1e-10;
const PHASE1_TOL: f64 = 1e-7;
const MAX_ITER: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Eq,
    Le,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<(usize, f64)>,
    rhs: f64,
    kind: RowKind,
}

/// `maximize c·x` subject to sparse rows; variables are nonnegative unless
/// marked free.
#[derive(Debug, Clone)]
pub struct LpProblem {
    num_vars: usize,
    objective: Vec<f64>,
    rows: Vec<Row>,
    free: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            free: vec![false; num_vars],
        }
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn mark_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    pub fn add_row(&mut self, kind: RowKind, coeffs: Vec<(usize, f64)>, rhs: f64) {
        self.rows.push(Row { coeffs, rhs, kind });
    }

    /// Two-phase tableau simplex. Errors on infeasible/unbounded problems.
    pub fn solve(&self) -> Result<LpSolution> {
        // expanded variable layout: free vars split into (+, -) parts
        let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(self.num_vars);
        let mut ncols = 0usize;
        for v in 0..self.num_vars {
            if self.free[v] {
                col_of.push((ncols, Some(ncols + 1)));
                ncols += 2;
            } else {
                col_of.push((ncols, None));
                ncols += 1;
            }
        }
        let nslack = self.rows.iter().filter(|r| r.kind == RowKind::Le).count();
        let m = self.rows.len();
        let total = ncols + nslack + m; // structural + slack + artificial
        let art0 = ncols + nslack;

        // dense tableau rows with rhs >= 0
        let mut tab = vec![vec![0.0; total + 1]; m];
        let mut basis = vec![0usize; m];
        let mut slack_idx = 0usize;
        for (r, row) in self.rows.iter().enumerate() {
            let flip = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            for &(v, c) in &row.coeffs {
                let (pos, neg) = col_of[v];
                tab[r][pos] += flip * c;
                if let Some(neg) = neg {
                    tab[r][neg] -= flip * c;
                }
            }
            tab[r][total] = flip * row.rhs;
            if row.kind == RowKind::Le {
                tab[r][ncols + slack_idx] = flip;
                slack_idx += 1;
            }
            // start from the artificial basis uniformly; slacks with flipped
            // rows would be -1 and unusable as a basis anyway
            tab[r][art0 + r] = 1.0;
            basis[r] = art0 + r;
        }

        // phase 1: minimize sum of artificials
        let mut cost1 = vec![0.0; total];
        for a in art0..total {
            cost1[a] = -1.0; // maximize -(sum of artificials)
        }
        let p1 = simplex(&mut tab, &mut basis, &cost1, total, None)?;
        if p1 < -PHASE1_TOL {
            return Err(Error::Solver(format!("LP infeasible (phase-1 value {p1})")));
        }
        // pivot remaining artificials out when possible
        for r in 0..m {
            if basis[r] >= art0 {
                if let Some(c) = (0..art0).find(|&c| tab[r][c].abs() > PIVOT_TOL) {
                    pivot(&mut tab, &mut basis, r, c);
                }
            }
        }

        // phase 2: maximize the real objective over structural columns
        let mut cost2 = vec![0.0; total];
        for v in 0..self.num_vars {
            let (pos, neg) = col_of[v];
            cost2[pos] = self.objective[v];
            if let Some(neg) = neg {
                cost2[neg] = -self.objective[v];
            }
        }
        simplex(&mut tab, &mut basis, &cost2, total, Some(art0))?;

        let mut expanded = vec![0.0; total];
        for (r, &b) in basis.iter().enumerate() {
            if b < total {
                expanded[b] = tab[r][total];
            }
        }
        let mut x = vec![0.0; self.num_vars];
        for v in 0..self.num_vars {
            let (pos, neg) = col_of[v];
            x[v] = expanded[pos] - neg.map_or(0.0, |n| expanded[n]);
        }
        let value = self
            .objective
            .iter()
            .zip(&x)
            .map(|(c, xi)| c * xi)
            .sum();
        Ok(LpSolution { value, x })
    }
}

/// Bland-rule tableau simplex maximizing `cost · x`; returns the objective
/// value. `forbid_from`: columns at or beyond this index may not enter
/// (used to lock out artificials in phase 2).
fn simplex(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    total: usize,
    forbid_from: Option<usize>,
) -> Result<f64> {
    let m = tab.len();
    let limit = forbid_from.unwrap_or(total);
    for _ in 0..MAX_ITER {
        // reduced costs: r_j = cost_j - cB^T B^{-1} A_j (tableau form)
        let mut entering = None;
        'cols: for j in 0..limit {
            if basis.contains(&j) {
                continue;
            }
            let mut r = cost[j];
            for (row, &b) in tab.iter().zip(basis.iter()) {
                if cost[b] != 0.0 {
                    r -= cost[b] * row[j];
                }
            }
            if r > PIVOT_TOL {
                entering = Some(j); // Bland: first improving column
                break 'cols;
            }
        }
        let Some(e) = entering else {
            let value = basis
                .iter()
                .zip(tab.iter())
                .map(|(&b, row)| cost[b] * row[total])
                .sum();
            return Ok(value);
        };
        // ratio test; Bland tie-break on smallest basis variable
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..m {
            let a = tab[r][e];
            if a > PIVOT_TOL {
                let ratio = (tab[r][total].max(0.0)) / a;
                match leave {
                    None => leave = Some((r, ratio)),
                    Some((lr, lratio)) => {
                        if ratio < lratio - RHS_TOL
                            || ((ratio - lratio).abs() <= RHS_TOL && basis[r] < basis[lr])
                        {
                            leave = Some((r, ratio));
                        }
                    }
                }
            }
        }
        let Some((lr, _)) = leave else {
            return Err(Error::Solver("LP unbounded".into()));
        };
        pivot(tab, basis, lr, e);
    }
    Err(Error::Solver("simplex iteration cap exceeded".into()))
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize) {
    let p = tab[row][col];
    let inv = 1.0 / p;
    for v in tab[row].iter_mut() {
        *v *= inv;
    }
    let pivot_row = tab[row].clone();
    for (r, tr) in tab.iter_mut().enumerate() {
        if r != row {
            let factor = tr[col];
            if factor != 0.0 {
                for (v, pv) in tr.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
    }
    basis[row] = col;
}
