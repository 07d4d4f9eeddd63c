//! Sharp bounds on `int g_{n+1} dmu` over nonnegative measures with
//! `int g_i dmu = c_i`, `i = 0..=n`.
//!
//! For strictly positive `c` the maximizing and minimizing measures have one
//! of four support shapes ([`SupportTemplate`]); the grid oracle supplies a
//! starting point and Newton solves the square moment system exactly. For
//! singularly positive `c` the representing measure is unique and is
//! polished directly.

mod newton;
mod template;

use serde::Serialize;
use thiserror::Error;

pub use newton::{newton_solve, polish, NewtonError, NewtonOptions, NewtonOutcome};
pub use template::{make_template, Endpoint, Parity, SupportTemplate};

use crate::funcsys::{Expr, FunctionSystem, MomentVector, SystemError};
use crate::measure::AtomicMeasure;
use crate::oracle::simplex::LpError;
use crate::oracle::{
    cone, default_feas_tol, make_grid, merge_clusters, ConePosition, MomentLp, OracleError, OracleSolution,
    DEFAULT_GRID,
};
use crate::verify::{self, SimplexSample, Status, Verdict, VerifyError};
use crate::Sense;

/// Points used for the positivity certificate of the constrained system.
const CERTIFICATE_POINTS: usize = 257;

#[derive(Debug, Clone)]
pub struct BoundConfig {
    pub grid_size: usize,
    pub seed: u64,
    /// Proceed even if the T+ hypothesis or the positivity certificate fails.
    pub override_hypothesis: bool,
    pub newton: NewtonOptions,
}

impl Default for BoundConfig {
    fn default() -> Self {
        BoundConfig {
            grid_size: DEFAULT_GRID,
            seed: verify::DEFAULT_SEED,
            override_hypothesis: false,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum BoundError {
    #[error("moment vector has {got} entries, system has {want} constrained functions")]
    Arity { got: usize, want: usize },
    #[error("moment vector is outside the moment cone (distance {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("T+ hypothesis not verified at level {level}: {status:?}", level = .0.level, status = .0.status)]
    HypothesisNotVerified(Box<Verdict>),
    #[error("constrained system has no positive combination on the check grid (margin {margin:.3e})")]
    NoCertificate { margin: f64 },
    #[error("Newton did not converge: {0}")]
    NoConvergence(NewtonError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Verify(VerifyError),
    #[error(transparent)]
    System(#[from] SystemError),
}

impl From<VerifyError> for BoundError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::NoCertificate { margin } => BoundError::NoCertificate { margin },
            other => BoundError::Verify(other),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub sense: Sense,
    pub value: f64,
    pub measure: AtomicMeasure,
    pub cone: ConePosition,
    /// Max `|sum_k w_k g_i(x_k) - c_i| / (1 + |c_i|)`.
    pub moment_residual: f64,
    pub newton_iterations: usize,
    /// `None` for singular `c`, where the support is not template-shaped.
    pub template: Option<SupportTemplate>,
    /// Nodes whose weight converged to zero and were dropped.
    pub pruned: Vec<f64>,
    /// Forced endpoints of the template missing from the final support.
    pub pruned_endpoints: Vec<Endpoint>,
    pub oracle_grid: usize,
    pub oracle_value: f64,
    /// `value - oracle_value` for Max, `oracle_value - value` for Min; the
    /// grid optimum is never better than the continuum one, so this is >= 0
    /// up to rounding.
    pub oracle_gap: f64,
    pub oracle_atoms: usize,
    /// Touching polynomial coefficients from the oracle.
    pub oracle_duals: Vec<f64>,
    pub hypothesis: Vec<Verdict>,
    pub hypothesis_overridden: bool,
}

/// `r_i = sum_k w_k g_i(x_k) - c_i` for the constrained functions.
pub fn moment_residuals(
    sys: &FunctionSystem,
    c: &MomentVector,
    measure: &AtomicMeasure,
) -> Result<Vec<f64>, SystemError> {
    (0..c.len()).map(|i| Ok(measure.integrate(|x| sys.eval(i, x))? - c.as_slice()[i])).collect()
}

fn scaled_max(r: &[f64], c: &MomentVector) -> f64 {
    r.iter().zip(c.as_slice()).map(|(r, c)| r.abs() / (1.0 + c.abs())).fold(0.0, f64::max)
}

/// Samples the T+ property of `(g_0..g_n)` and `(g_0..g_{n+1})` and looks
/// for a positive combination of the constrained functions.
pub fn check_hypothesis(sys: &FunctionSystem, seed: u64) -> Result<(Vec<Verdict>, Option<BoundError>), BoundError> {
    let n = sys.len() - 2;
    let mut verdicts = Vec::new();
    let mut failure = None;
    for k in [n, n + 1] {
        let sample = SimplexSample::default_for(sys.a(), sys.b(), k, seed);
        let v = verify::check_tplus(sys, k, &sample)?;
        if v.status != Status::VerifiedPlus && failure.is_none() {
            failure = Some(BoundError::HypothesisNotVerified(Box::new(v.clone())));
        }
        verdicts.push(v);
    }
    if failure.is_none() {
        let grid = make_grid(sys.a(), sys.b(), CERTIFICATE_POINTS)?;
        if let Err(e) = verify::positivity_certificate(sys, n, grid.nodes()) {
            failure = Some(e.into());
        }
    }
    Ok((verdicts, failure))
}

/// Computes the maximum or minimum of `int g_{n+1} dmu` over measures with
/// moments `c`. `sys` holds `g_0..g_n` followed by the objective.
pub fn bound(
    sys: &FunctionSystem,
    c: &MomentVector,
    sense: Sense,
    config: &BoundConfig,
) -> Result<BoundReport, BoundError> {
    if sys.len() < 2 {
        return Err(OracleError::TooFewFunctions.into());
    }
    let rows = sys.len() - 1;
    if c.len() != rows {
        return Err(BoundError::Arity { got: c.len(), want: rows });
    }
    let (hypothesis, failure) = check_hypothesis(sys, config.seed)?;
    let overridden = failure.is_some();
    if let Some(e) = failure {
        if !config.override_hypothesis {
            return Err(e);
        }
    }

    let grid = make_grid(sys.a(), sys.b(), config.grid_size)?;
    let lp = MomentLp::new(sys, &grid)?;
    let cone = cone::classify_with(&lp, c)?;
    let (outcome, template, oracle) = match &cone {
        ConePosition::Infeasible { residual } => return Err(BoundError::Infeasible { residual: *residual }),
        ConePosition::SingularlyPositive { measure, .. } => {
            let oracle = lp.solve(c, sense, cone::cone_tolerance(c))?;
            match polish(sys, c, measure, &config.newton) {
                Ok(out) => (out, None, oracle),
                Err(_) => strict_solve(sys, c, sense, &lp, config)?,
            }
        }
        ConePosition::StrictlyPositive { .. } => strict_solve(sys, c, sense, &lp, config)?,
    };

    let objective = sys.len() - 1;
    let value = outcome.measure.integrate(|x| sys.eval(objective, x))?;
    let moment_residual = scaled_max(&moment_residuals(sys, c, &outcome.measure)?, c);
    let pruned_endpoints = template
        .as_ref()
        .map(|t: &SupportTemplate| {
            t.forced_endpoints
                .iter()
                .copied()
                .filter(|e| {
                    let x = match e {
                        Endpoint::A => sys.a(),
                        Endpoint::B => sys.b(),
                    };
                    !outcome.measure.nodes().contains(&x)
                })
                .collect()
        })
        .unwrap_or_default();
    let oracle_gap = match sense {
        Sense::Max => value - oracle.value,
        Sense::Min => oracle.value - value,
    };
    Ok(BoundReport {
        sense,
        value,
        measure: outcome.measure,
        cone,
        moment_residual,
        newton_iterations: outcome.iterations,
        template,
        pruned: outcome.pruned,
        pruned_endpoints,
        oracle_grid: oracle.grid_size,
        oracle_value: oracle.value,
        oracle_gap,
        oracle_atoms: oracle.measure.len(),
        oracle_duals: oracle.duals,
        hypothesis,
        hypothesis_overridden: overridden,
    })
}

fn oracle_solve(lp: &MomentLp, c: &MomentVector, sense: Sense) -> Result<OracleSolution, OracleError> {
    match lp.solve(c, sense, default_feas_tol(c)) {
        Err(OracleError::Lp(LpError::Infeasible { .. })) => lp.solve(c, sense, cone::cone_tolerance(c)),
        other => other,
    }
}

fn strict_solve(
    sys: &FunctionSystem,
    c: &MomentVector,
    sense: Sense,
    lp: &MomentLp,
    config: &BoundConfig,
) -> Result<(NewtonOutcome, Option<SupportTemplate>, OracleSolution), BoundError> {
    let oracle = oracle_solve(lp, c, sense)?;
    let template = make_template(lp.rows() - 1, sense);
    let g = lp.grid();
    let merged = merge_clusters(&oracle.measure, cone::cluster_gap(g), g.a(), g.b());
    let outcome = match newton_solve(sys, c, &template, &merged, &config.newton) {
        Ok(out) => out,
        Err(first) => newton_solve(sys, c, &template, &oracle.measure, &config.newton)
            .map_err(|_| BoundError::NoConvergence(first))?,
    };
    Ok((outcome, Some(template), oracle))
}

/// Result of solving the same problem with two objectives.
#[derive(Debug, Clone, Serialize)]
pub struct IndependenceReport {
    /// Max over matched atoms of `|node difference| + |weight difference|`.
    pub distance: f64,
    pub first: BoundReport,
    pub second: BoundReport,
}

/// Solves with the system's objective and with `alt` in its place, and
/// measures how far apart the two extremal measures are.
pub fn objective_independence_check(
    sys: &FunctionSystem,
    c: &MomentVector,
    alt: &Expr,
    sense: Sense,
    config: &BoundConfig,
) -> Result<IndependenceReport, BoundError> {
    let first = bound(sys, c, sense, config)?;
    let alt_sys = sys.with_objective(alt.clone())?;
    let second = bound(&alt_sys, c, sense, config)?;
    let distance = support_distance(&first.measure, &second.measure);
    Ok(IndependenceReport { distance, first, second })
}

/// Bottleneck distance between two atomic measures with cost
/// `|x - y| + |v - w|` per matched pair. Unmatched atoms are matched to a
/// zero-weight atom at the same node and cost their weight.
pub fn support_distance(p: &AtomicMeasure, q: &AtomicMeasure) -> f64 {
    let (long, short) = if p.len() >= q.len() { (p, q) } else { (q, p) };
    let long = long.atoms();
    let short = short.atoms();
    let cost = |i: usize, j: Option<usize>| match j {
        Some(j) => (long[i].node - short[j].node).abs() + (long[i].weight - short[j].weight).abs(),
        None => long[i].weight.abs(),
    };
    if long.len() > 8 {
        return (0..long.len()).map(|i| cost(i, (i < short.len()).then_some(i))).fold(0.0, f64::max);
    }
    // slot j < short.len() is a real atom, the rest are padding
    let mut slots: Vec<usize> = (0..long.len()).collect();
    let mut best = f64::INFINITY;
    permute(&mut slots, 0, &mut |perm| {
        let d = perm.iter().enumerate().map(|(i, &s)| cost(i, (s < short.len()).then_some(s))).fold(0.0, f64::max);
        best = best.min(d);
    });
    if long.is_empty() {
        0.0
    } else {
        best
    }
}

fn permute(v: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

/// Slack of a touching polynomial on a check grid and at the atoms.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TouchingCheck {
    /// Min over the grid of `P - g_{n+1}` (Max) or `g_{n+1} - P` (Min).
    pub min_oriented_slack: f64,
    /// Max over the atoms of `|P - g_{n+1}|`.
    pub max_atom_slack: f64,
}

/// Evaluates `P = sum_i lambda_i g_i` against the objective.
pub fn touching_check(
    sys: &FunctionSystem,
    lambda: &[f64],
    measure: &AtomicMeasure,
    sense: Sense,
    points: usize,
) -> Result<TouchingCheck, BoundError> {
    let objective = sys.len() - 1;
    let slack = |x: f64| -> Result<f64, SystemError> {
        let mut p = 0.0;
        for (i, l) in lambda.iter().enumerate() {
            p += l * sys.eval(i, x)?;
        }
        Ok(p - sys.eval(objective, x)?)
    };
    let sign = match sense {
        Sense::Max => 1.0,
        Sense::Min => -1.0,
    };
    let grid = make_grid(sys.a(), sys.b(), points)?;
    let mut min_oriented_slack = f64::INFINITY;
    for &x in grid.nodes() {
        min_oriented_slack = min_oriented_slack.min(sign * slack(x)?);
    }
    let mut max_atom_slack: f64 = 0.0;
    for at in measure.atoms() {
        max_atom_slack = max_atom_slack.max(slack(at.node)?.abs());
    }
    Ok(TouchingCheck { min_oriented_slack, max_atom_slack })
}
