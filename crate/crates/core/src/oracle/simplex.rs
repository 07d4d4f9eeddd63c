//! Dense two-phase primal simplex for `min c'x  s.t.  Ax = b, x >= 0`.
//!
//! Problems here have few rows (one per moment constraint) and many columns
//! (one per grid node), so a full tableau of `m x (n + m)` entries is cheap.
//! Ties in the ratio test are broken lexicographically using the columns of
//! the basis inverse; after `50 * columns` iterations pricing switches to
//! Bland's rule. The final basic solution and duals are recomputed from the
//! original data by a fresh factorization of the basis.

use serde::Serialize;
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("infeasible: phase-one residual {residual:.3e} exceeds tolerance {tolerance:.3e}")]
    Infeasible { residual: f64, tolerance: f64 },
    #[error("unbounded: column {column} is a ray of descent")]
    Unbounded { column: usize },
    #[error("iteration limit {limit} reached")]
    IterationLimit { limit: usize },
}

/// `min c'x  s.t.  Ax = b, x >= 0` with `A` stored row-major.
#[derive(Debug, Clone)]
pub struct StandardForm {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl StandardForm {
    pub fn new(rows: usize, cols: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Self {
        assert_eq!(a.len(), rows * cols);
        assert_eq!(b.len(), rows);
        assert_eq!(c.len(), cols);
        StandardForm { rows, cols, a, b, c }
    }

    /// `A x` for a dense `x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows)
            .map(|i| {
                let row = &self.a[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(x).filter(|(_, &xj)| xj != 0.0).map(|(a, x)| a * x).sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Absolute tolerance on the phase-one objective (sum of artificials).
    pub feas_tol: f64,
    /// Pricing tolerance, relative to `max(1, |c|_inf)`.
    pub opt_tol: f64,
    pub pivot_tol: f64,
    /// Bland's rule takes over after `bland_factor * columns` iterations.
    pub bland_factor: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { feas_tol: 1e-9, opt_tol: 1e-11, pivot_tol: 1e-11, bland_factor: 50 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LpSolution {
    /// Dense primal solution over the structural columns.
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers `y` with `B' y = c_B` (original row signs).
    pub duals: Vec<f64>,
    /// Basic structural columns (artificials left in redundant rows excluded).
    pub basis: Vec<usize>,
    pub iterations: usize,
    pub phase1_residual: f64,
}

struct Tableau {
    m: usize,
    n: usize,
    // m rows of width n + m + 1; column n + r is artificial r, the last is rhs
    t: Vec<f64>,
    basis: Vec<usize>,
    d: Vec<f64>,
    iterations: usize,
    cursor: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.n + self.m + 1
    }

    fn at(&self, r: usize, j: usize) -> f64 {
        self.t[r * self.width() + j]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.n + self.m)
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.width();
        for j in 0..self.n + self.m {
            let mut dj = cost[j];
            for r in 0..self.m {
                let cb = cost[self.basis[r]];
                if cb != 0.0 {
                    dj -= cb * self.t[r * w + j];
                }
            }
            self.d[j] = dj;
        }
    }

    fn pivot(&mut self, pr: usize, q: usize) {
        let w = self.width();
        let p = self.t[pr * w + q];
        for k in 0..w {
            self.t[pr * w + k] /= p;
        }
        let prow: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.m {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + q];
            if f != 0.0 {
                let row = &mut self.t[r * w..(r + 1) * w];
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
                row[q] = 0.0;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for (dj, pv) in self.d.iter_mut().zip(&prow) {
                *dj -= f * pv;
            }
            self.d[q] = 0.0;
        }
        self.basis[pr] = q;
        self.iterations += 1;
    }

    fn price(&mut self, tol: f64, bland: bool) -> Option<usize> {
        let n = self.n;
        if bland {
            return (0..n).find(|&j| self.d[j] < -tol);
        }
        if n <= 1024 {
            return best_in(&self.d, 0..n, tol);
        }
        // partial pricing over wrapped segments
        let seg = (n / 8).max(256);
        let mut start = self.cursor;
        for _ in 0..n.div_ceil(seg) {
            let end = (start + seg).min(n);
            if let Some(q) = best_in(&self.d, start..end, tol) {
                self.cursor = if end == n { 0 } else { end };
                return Some(q);
            }
            start = if end == n { 0 } else { end };
        }
        None
    }

    fn ratio_test(&self, q: usize, pivot_tol: f64, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.m {
            let arq = self.at(r, q);
            if arq <= pivot_tol {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / arq;
            best = match best {
                None => Some((r, ratio)),
                Some((br, bratio)) => {
                    let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                    if ratio < bratio && !tie {
                        Some((r, ratio))
                    } else if tie && self.tie_prefers(r, br, q, bland) {
                        Some((r, ratio.min(bratio)))
                    } else {
                        Some((br, bratio))
                    }
                }
            };
        }
        best.map(|(r, _)| r)
    }

    /// Lexicographic comparison of rows of `B^-1` scaled by the pivot column,
    /// or smallest basic index under Bland's rule.
    fn tie_prefers(&self, r: usize, s: usize, q: usize, bland: bool) -> bool {
        if bland {
            return self.basis[r] < self.basis[s];
        }
        let (pr, ps) = (self.at(r, q), self.at(s, q));
        for k in 0..self.m {
            let (u, v) = (self.at(r, self.n + k) / pr, self.at(s, self.n + k) / ps);
            if (u - v).abs() > 1e-14 * (1.0 + u.abs().max(v.abs())) {
                return u < v;
            }
        }
        false
    }

    fn run(&mut self, cost: &[f64], opts: &SimplexOptions, allow_unbounded: bool) -> Result<(), LpError> {
        let scale = cost.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
        let tol = opts.opt_tol * scale;
        let bland_after = opts.bland_factor * (self.n + self.m);
        let limit = bland_after + 100 * (self.n + self.m) + 1000;
        let start = self.iterations;
        loop {
            let done = self.iterations - start;
            if done > limit {
                return Err(LpError::IterationLimit { limit });
            }
            let bland = done >= bland_after;
            let Some(q) = self.price(tol, bland) else {
                return Ok(());
            };
            match self.ratio_test(q, opts.pivot_tol, bland) {
                Some(r) => self.pivot(r, q),
                None if allow_unbounded => return Err(LpError::Unbounded { column: q }),
                None => {
                    // cannot happen in phase one (objective bounded below); treat as optimal
                    self.d[q] = 0.0;
                }
            }
        }
    }
}

fn best_in(d: &[f64], range: std::ops::Range<usize>, tol: f64) -> Option<usize> {
    let mut best: Option<usize> = None;
    for j in range {
        if d[j] < -tol && best.is_none_or(|b| d[j] < d[b]) {
            best = Some(j);
        }
    }
    best
}

/// Runs phase one only. Returns the minimal sum of absolute constraint
/// residuals over `x >= 0` and the dense minimizer.
pub fn phase_one(lp: &StandardForm, opts: &SimplexOptions) -> Result<(f64, Vec<f64>), LpError> {
    let (tab, _) = phase_one_tableau(lp, opts)?;
    Ok((artificial_sum(&tab), tableau_primal(&tab)))
}

pub fn solve(lp: &StandardForm, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    let (mut tab, signs) = phase_one_tableau(lp, opts)?;
    let residual = artificial_sum(&tab);
    if residual > opts.feas_tol {
        return Err(LpError::Infeasible { residual, tolerance: opts.feas_tol });
    }
    drive_out_artificials(&mut tab, opts.pivot_tol);

    let (m, n) = (lp.rows, lp.cols);
    let mut cost = lp.c.clone();
    cost.extend(std::iter::repeat_n(0.0, m));
    tab.set_costs(&cost);
    tab.run(&cost, opts, true)?;

    let (x, duals) = refactor(lp, &tab, &signs).unwrap_or_else(|| {
        let x = tableau_primal(&tab);
        let duals = tableau_duals(&tab, &cost, &signs);
        (x, duals)
    });
    let objective = lp.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    let basis = tab.basis.iter().copied().filter(|&j| j < n).collect();
    Ok(LpSolution { x, objective, duals, basis, iterations: tab.iterations, phase1_residual: residual })
}

fn phase_one_tableau(lp: &StandardForm, opts: &SimplexOptions) -> Result<(Tableau, Vec<f64>), LpError> {
    let (m, n) = (lp.rows, lp.cols);
    let w = n + m + 1;
    let signs: Vec<f64> = lp.b.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
    let mut t = vec![0.0; m * w];
    for r in 0..m {
        let s = signs[r];
        for j in 0..n {
            t[r * w + j] = s * lp.a[r * n + j];
        }
        t[r * w + n + r] = 1.0;
        t[r * w + n + m] = s * lp.b[r];
    }
    let mut tab = Tableau { m, n, t, basis: (n..n + m).collect(), d: vec![0.0; n + m], iterations: 0, cursor: 0 };
    let mut cost = vec![0.0; n];
    cost.extend(std::iter::repeat_n(1.0, m));
    tab.set_costs(&cost);
    tab.run(&cost, opts, false)?;
    Ok((tab, signs))
}

fn artificial_sum(tab: &Tableau) -> f64 {
    (0..tab.m).filter(|&r| tab.basis[r] >= tab.n).map(|r| tab.rhs(r).max(0.0)).sum()
}

fn tableau_primal(tab: &Tableau) -> Vec<f64> {
    let mut x = vec![0.0; tab.n];
    for r in 0..tab.m {
        let j = tab.basis[r];
        if j < tab.n {
            x[j] = tab.rhs(r).max(0.0);
        }
    }
    x
}

fn tableau_duals(tab: &Tableau, cost: &[f64], signs: &[f64]) -> Vec<f64> {
    // y_k = sum_r c_B[r] * (B^-1)[r][k]; B^-1 lives in the artificial columns
    (0..tab.m)
        .map(|k| {
            let y: f64 = (0..tab.m).map(|r| cost[tab.basis[r]] * tab.at(r, tab.n + k)).sum();
            y * signs[k]
        })
        .collect()
}

fn drive_out_artificials(tab: &mut Tableau, pivot_tol: f64) {
    let w = tab.width();
    for r in 0..tab.m {
        if tab.basis[r] < tab.n {
            continue;
        }
        // leftover residual is within tolerance; forget it
        tab.t[r * w + tab.n + tab.m] = 0.0;
        let best = (0..tab.n)
            .filter(|&j| !tab.basis.contains(&j))
            .max_by(|&i, &j| tab.at(r, i).abs().total_cmp(&tab.at(r, j).abs()));
        if let Some(j) = best {
            if tab.at(r, j).abs() > pivot_tol.max(1e-9) {
                tab.pivot(r, j);
            }
        }
    }
}

/// Recomputes `x_B = B^-1 b` and `y = B^-T c_B` from the original data.
fn refactor(lp: &StandardForm, tab: &Tableau, signs: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let (m, n) = (lp.rows, lp.cols);
    let mut bmat = vec![0.0; m * m];
    let mut cb = vec![0.0; m];
    for (k, &j) in tab.basis.iter().enumerate() {
        for r in 0..m {
            bmat[r * m + k] = if j < n {
                signs[r] * lp.a[r * n + j]
            } else if j - n == r {
                1.0
            } else {
                0.0
            };
        }
        cb[k] = if j < n { lp.c[j] } else { 0.0 };
    }
    let rhs: Vec<f64> = (0..m).map(|r| signs[r] * lp.b[r]).collect();
    let xb = linalg::solve(&bmat, m, &rhs)?;
    let y = linalg::solve(&linalg::transpose(&bmat, m), m, &cb)?;
    let mut x = vec![0.0; n];
    for (k, &j) in tab.basis.iter().enumerate() {
        if j < n {
            x[j] = xb[k].max(0.0);
        }
    }
    let duals = y.iter().zip(signs).map(|(y, s)| y * s).collect();
    Some((x, duals))
}
