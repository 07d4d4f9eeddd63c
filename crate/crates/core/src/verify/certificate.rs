use serde::Serialize;

use super::VerifyError;
use crate::funcsys::FunctionSystem;
use crate::oracle::simplex::{self, SimplexOptions, StandardForm};

/// Coefficients with `sum_i lambda_i g_i(x) >= margin > 0` at every grid
/// point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositivityCertificate {
    pub coefficients: Vec<f64>,
    pub margin: f64,
}

const MARGIN_TOL: f64 = 1e-9;

/// Maximizes `t` subject to `sum_i lambda_i g_i(x_j) >= t` and
/// `|lambda_i| <= 1` over the grid, for `g_0, ..., g_n`.
///
/// The LP has one constraint per grid point, so the dual is solved instead:
///
/// ```text
/// min sum_i (u_i + v_i)
///   s.t. sum_j w_j = 1
///        sum_j w_j g_i(x_j) - u_i + v_i = 0
///        w, u, v >= 0
/// ```
///
/// whose row multipliers are `(t, -lambda)`. The margin is then recomputed
/// directly from `lambda` on the grid.
pub fn positivity_certificate(
    sys: &FunctionSystem,
    n: usize,
    grid: &[f64],
) -> Result<PositivityCertificate, VerifyError> {
    if n >= sys.len() {
        return Err(VerifyError::Level { k: n, need: n + 1, len: sys.len() });
    }
    if grid.is_empty() {
        return Err(VerifyError::EmptySample);
    }
    let dim = n + 1;
    let npts = grid.len();
    let rows = dim + 1;
    let cols = npts + 2 * dim;
    let mut values = vec![0.0; dim * npts];
    for i in 0..dim {
        for (j, &x) in grid.iter().enumerate() {
            values[i * npts + j] = sys.eval(i, x)?;
        }
    }
    let mut a = vec![0.0; rows * cols];
    a[..npts].fill(1.0);
    for i in 0..dim {
        let r = (i + 1) * cols;
        a[r..r + npts].copy_from_slice(&values[i * npts..(i + 1) * npts]);
        a[r + npts + i] = -1.0;
        a[r + npts + dim + i] = 1.0;
    }
    let mut b = vec![0.0; rows];
    b[0] = 1.0;
    let mut c = vec![0.0; cols];
    for v in &mut c[npts..] {
        *v = 1.0;
    }
    let lp = StandardForm::new(rows, cols, a, b, c);
    let sol = simplex::solve(&lp, &SimplexOptions::default())?;
    let coefficients: Vec<f64> = sol.duals[1..].iter().map(|y| (-y).clamp(-1.0, 1.0)).collect();
    let margin = (0..npts)
        .map(|j| (0..dim).map(|i| coefficients[i] * values[i * npts + j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    if margin.is_nan() || margin <= MARGIN_TOL {
        return Err(VerifyError::NoCertificate { margin });
    }
    Ok(PositivityCertificate { coefficients, margin })
}
