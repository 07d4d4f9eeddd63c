//! Grid linear-programming oracle for the moment problem.
//!
//! Restricting measures to a grid turns the moment problem into a finite LP
//! with one row per constrained function and one column per node. Basic
//! optimal solutions have at most `n + 1` atoms; the LP duals give the
//! touching polynomial; ray LPs classify `c` as interior or boundary of the
//! grid moment cone.

pub(crate) mod cone;
mod grid;
pub mod simplex;

use serde::Serialize;
use thiserror::Error;

pub use cone::{classify_cone_position, cone_tolerance, merge_clusters, support_index, ConePosition, SupportIndex};
pub use grid::{make_grid, Grid};
use simplex::{LpError, SimplexOptions, StandardForm};

use crate::funcsys::{FunctionSystem, MomentVector, SystemError};
use crate::measure::AtomicMeasure;
use crate::Sense;

/// Default oracle grid: 2^12 + 1 uniform nodes.
pub const DEFAULT_GRID: usize = 4097;
/// Refinement ladder used for convergence reports.
pub const LADDER: [usize; 3] = [1025, 4097, 16385];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("grid needs at least 2 nodes, got {0}")]
    GridSize(usize),
    #[error("invalid grid interval [{a}, {b}]")]
    GridInterval { a: f64, b: f64 },
    #[error("grid nodes must be finite and strictly increasing")]
    GridOrder,
    #[error("grid [{ga}, {gb}] does not match the system interval [{a}, {b}]")]
    GridMismatch { ga: f64, gb: f64, a: f64, b: f64 },
    #[error("moment vector has {got} entries, system has {want} constrained functions")]
    Arity { got: usize, want: usize },
    #[error("system needs at least one constrained function and an objective")]
    TooFewFunctions,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("basic solution has {atoms} atoms, more than {bound}")]
    SupportBound { atoms: usize, bound: usize },
}

/// Result of one grid LP solve; doubles as the oracle report record.
#[derive(Debug, Clone, Serialize)]
pub struct OracleSolution {
    pub grid_size: usize,
    pub sense: Sense,
    pub value: f64,
    pub measure: AtomicMeasure,
    /// Coefficients of the touching polynomial `sum lambda_i g_i`: it lies
    /// above the objective on the grid for `Max`, below it for `Min`.
    pub duals: Vec<f64>,
    pub phase1_residual: f64,
    pub iterations: usize,
    /// Largest `|sum_j w_j g_i(x_j) - c_i| / (1 + |c_i|)`.
    pub max_scaled_residual: f64,
    /// True when `c` was outside the grid cone by less than the feasibility
    /// tolerance and was replaced by its nearest grid-representable vector.
    pub projected: bool,
}

/// Grid LP data with the function values evaluated once.
#[derive(Debug, Clone)]
pub struct MomentLp {
    grid: Grid,
    rows: usize,
    // rows x N, row-major
    values: Vec<f64>,
    objective: Vec<f64>,
}

impl MomentLp {
    /// `sys` holds the constrained functions followed by the objective.
    pub fn new(sys: &FunctionSystem, grid: &Grid) -> Result<MomentLp, OracleError> {
        if sys.len() < 2 {
            return Err(OracleError::TooFewFunctions);
        }
        let scale = (sys.b() - sys.a()).abs();
        if (grid.a() - sys.a()).abs() > 1e-12 * scale || (grid.b() - sys.b()).abs() > 1e-12 * scale {
            return Err(OracleError::GridMismatch { ga: grid.a(), gb: grid.b(), a: sys.a(), b: sys.b() });
        }
        let rows = sys.len() - 1;
        let n = grid.len();
        let mut values = vec![0.0; rows * n];
        for i in 0..rows {
            for (j, &x) in grid.nodes().iter().enumerate() {
                values[i * n + j] = sys.eval(i, x)?;
            }
        }
        let objective = grid.nodes().iter().map(|&x| sys.eval(rows, x)).collect::<Result<Vec<_>, _>>()?;
        Ok(MomentLp { grid: grid.clone(), rows, values, objective })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    fn check_arity(&self, c: &MomentVector) -> Result<(), OracleError> {
        if c.len() != self.rows {
            return Err(OracleError::Arity { got: c.len(), want: self.rows });
        }
        Ok(())
    }

    fn standard_form(&self, b: &[f64], cost: Vec<f64>) -> StandardForm {
        StandardForm::new(self.rows, self.grid.len(), self.values.clone(), b.to_vec(), cost)
    }

    /// Moments of a grid measure given by dense weights.
    pub fn moments(&self, w: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        (0..self.rows)
            .map(|i| w.iter().enumerate().filter(|(_, &wj)| wj != 0.0).map(|(j, wj)| wj * self.values[i * n + j]).sum())
            .collect()
    }

    /// Smallest `sum_i |(A w)_i - c_i|` over grid measures `w >= 0`.
    pub fn distance_to_cone(&self, c: &MomentVector) -> Result<(f64, Vec<f64>), OracleError> {
        self.check_arity(c)?;
        let lp = self.standard_form(c.as_slice(), vec![0.0; self.grid.len()]);
        Ok(simplex::phase_one(&lp, &SimplexOptions::default())?)
    }

    /// Optimizes the objective over grid measures matching `c` to within
    /// `feas_tol` (absolute, on the summed residual).
    pub fn solve(&self, c: &MomentVector, sense: Sense, feas_tol: f64) -> Result<OracleSolution, OracleError> {
        self.check_arity(c)?;
        let opts = SimplexOptions { feas_tol, ..SimplexOptions::default() };
        let (residual, w1) = self.distance_to_cone(c)?;
        if residual > feas_tol {
            return Err(LpError::Infeasible { residual, tolerance: feas_tol }.into());
        }
        let noise = 1e-13 * (1.0 + c.norm());
        let (target, projected) =
            if residual > noise { (self.moments(&w1), true) } else { (c.as_slice().to_vec(), false) };
        let cost = match sense {
            Sense::Max => self.objective.iter().map(|f| -f).collect(),
            Sense::Min => self.objective.clone(),
        };
        let lp = self.standard_form(&target, cost);
        let sol = simplex::solve(&lp, &opts)?;

        let nodes = self.grid.nodes();
        let measure = AtomicMeasure::from_pairs(
            sol.x.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(j, &w)| (nodes[j], w)).collect(),
        );
        if measure.len() > self.rows {
            return Err(OracleError::SupportBound { atoms: measure.len(), bound: self.rows });
        }
        let value: f64 = sol.x.iter().zip(&self.objective).map(|(w, f)| w * f).sum();
        let duals = match sense {
            Sense::Max => sol.duals.iter().map(|y| -y).collect(),
            Sense::Min => sol.duals.clone(),
        };
        let max_scaled_residual = self
            .moments(&sol.x)
            .iter()
            .zip(c.as_slice())
            .map(|(m, c)| (m - c).abs() / (1.0 + c.abs()))
            .fold(0.0, f64::max);
        Ok(OracleSolution {
            grid_size: self.grid.len(),
            sense,
            value,
            measure,
            duals,
            phase1_residual: residual,
            iterations: sol.iterations,
            max_scaled_residual,
            projected,
        })
    }

    /// Largest `s >= 0` with `c + s * dir` in the grid cone; `None` when the
    /// ray never leaves the cone, `Some(0.0)` when `c` itself is outside.
    pub fn ray_length(&self, c: &MomentVector, dir: &[f64], feas_tol: f64) -> Result<Option<f64>, OracleError> {
        self.check_arity(c)?;
        let n = self.grid.len();
        let cols = n + 1;
        let mut a = Vec::with_capacity(self.rows * cols);
        for (row, d) in self.values.chunks(n).zip(dir) {
            a.extend_from_slice(row);
            a.push(-d);
        }
        let mut cost = vec![0.0; cols];
        cost[n] = -1.0;
        let lp = StandardForm::new(self.rows, cols, a, c.as_slice().to_vec(), cost);
        let opts = SimplexOptions { feas_tol, ..SimplexOptions::default() };
        match simplex::solve(&lp, &opts) {
            Ok(sol) => Ok(Some(sol.x[n])),
            Err(LpError::Infeasible { .. }) => Ok(Some(0.0)),
            Err(LpError::Unbounded { .. }) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Slack `sum_i lambda_i g_i(x_j) - g_{n+1}(x_j)` at every grid node.
    pub fn touching_slack(&self, lambda: &[f64]) -> Vec<f64> {
        let n = self.grid.len();
        (0..n)
            .map(|j| {
                let p: f64 = (0..self.rows).map(|i| lambda[i] * self.values[i * n + j]).sum();
                p - self.objective[j]
            })
            .collect()
    }
}

/// Default absolute feasibility tolerance for `c`: `1e-9 * |c|`.
pub fn default_feas_tol(c: &MomentVector) -> f64 {
    1e-9 * c.norm()
}

/// Solves the grid LP with the default feasibility tolerance.
pub fn solve_grid_lp(
    sys: &FunctionSystem,
    c: &MomentVector,
    grid: &Grid,
    sense: Sense,
) -> Result<OracleSolution, OracleError> {
    MomentLp::new(sys, grid)?.solve(c, sense, default_feas_tol(c))
}

/// Grid LP optima on uniform grids of the given sizes.
pub fn oracle_ladder(
    sys: &FunctionSystem,
    c: &MomentVector,
    sense: Sense,
    sizes: &[usize],
) -> Result<Vec<OracleSolution>, OracleError> {
    sizes.iter().map(|&n| solve_grid_lp(sys, c, &make_grid(sys.a(), sys.b(), n)?, sense)).collect()
}

/// Complementary-slackness summary for a touching polynomial on a grid.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DualCheck {
    /// Smallest slack, with the sign oriented so that feasibility means >= 0.
    pub min_oriented_slack: f64,
    /// Largest |slack| over the support of the measure.
    pub max_support_slack: f64,
}

pub fn dual_check(lp: &MomentLp, sol: &OracleSolution) -> DualCheck {
    let slack = lp.touching_slack(&sol.duals);
    let sign = match sol.sense {
        Sense::Max => 1.0,
        Sense::Min => -1.0,
    };
    let min_oriented_slack = slack.iter().map(|s| sign * s).fold(f64::INFINITY, f64::min);
    let nodes = lp.grid().nodes();
    let max_support_slack = sol
        .measure
        .atoms()
        .iter()
        .filter_map(|at| nodes.binary_search_by(|x| x.total_cmp(&at.node)).ok())
        .map(|j| slack[j].abs())
        .fold(0.0, f64::max);
    DualCheck { min_oriented_slack, max_support_slack }
}
