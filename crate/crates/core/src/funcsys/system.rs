use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{EvalError, Expr};
use crate::measure::AtomicMeasure;

/// Number of uniform points used to check that `h` is positive before
/// rescaling. Sampling only; not a proof of positivity.
pub const RESCALE_CHECK_POINTS: usize = 10_001;

const FINITE_CHECK_POINTS: usize = 257;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("invalid interval [{a}, {b}]: need finite a < b")]
    BadInterval { a: f64, b: f64 },
    #[error("function system is empty")]
    Empty,
    #[error("function g_{index} fails to evaluate: {source}")]
    Eval {
        index: usize,
        #[source]
        source: EvalError,
    },
    #[error("derivative order {order} exceeds the configured maximum {max}")]
    OrderTooHigh { order: usize, max: usize },
    #[error("rescaling function is not positive: h({x}) = {value}")]
    NonPositiveScale { x: f64, value: f64 },
    #[error("rescaling function fails to evaluate: {0}")]
    ScaleEval(#[source] EvalError),
    #[error("index {index} out of range for a system of {len} functions")]
    Index { index: usize, len: usize },
}

/// An ordered family of functions on a closed interval, with symbolic
/// derivatives precomputed up to `max_derivative_order`.
///
/// In a moment problem the last function is the objective and the others are
/// the constrained functions.
#[derive(Debug, Clone)]
pub struct FunctionSystem {
    a: f64,
    b: f64,
    // derivs[i][j] is the j-th derivative of g_i
    derivs: Vec<Vec<Expr>>,
}

impl FunctionSystem {
    /// Builds a system with derivatives available up to order `len - 1`,
    /// enough for every Wronskian of the family.
    pub fn new(a: f64, b: f64, functions: Vec<Expr>) -> Result<Self, SystemError> {
        let order = functions.len().saturating_sub(1).max(1);
        Self::with_max_order(a, b, functions, order)
    }

    pub fn with_max_order(
        a: f64,
        b: f64,
        functions: Vec<Expr>,
        max_derivative_order: usize,
    ) -> Result<Self, SystemError> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(SystemError::BadInterval { a, b });
        }
        if functions.is_empty() {
            return Err(SystemError::Empty);
        }
        for (index, g) in functions.iter().enumerate() {
            for j in 0..FINITE_CHECK_POINTS {
                let x = grid_point(a, b, j, FINITE_CHECK_POINTS);
                g.eval(x).map_err(|source| SystemError::Eval { index, source })?;
            }
        }
        let derivs = functions
            .into_iter()
            .map(|g| {
                let mut chain = Vec::with_capacity(max_derivative_order + 1);
                chain.push(g);
                for j in 1..=max_derivative_order {
                    let next = chain[j - 1].derivative();
                    chain.push(next);
                }
                chain
            })
            .collect();
        Ok(FunctionSystem { a, b, derivs })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.derivs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.derivs.is_empty()
    }

    pub fn max_derivative_order(&self) -> usize {
        self.derivs[0].len() - 1
    }

    pub fn function(&self, i: usize) -> &Expr {
        &self.derivs[i][0]
    }

    pub fn functions(&self) -> impl Iterator<Item = &Expr> {
        self.derivs.iter().map(|d| &d[0])
    }

    pub fn derivative(&self, i: usize, order: usize) -> Result<&Expr, SystemError> {
        let chain = self.derivs.get(i).ok_or(SystemError::Index { index: i, len: self.len() })?;
        chain.get(order).ok_or(SystemError::OrderTooHigh { order, max: self.max_derivative_order() })
    }

    pub fn eval(&self, i: usize, x: f64) -> Result<f64, SystemError> {
        self.derivs[i][0].eval(x).map_err(|source| SystemError::Eval { index: i, source })
    }

    pub fn eval_derivative(&self, i: usize, order: usize, x: f64) -> Result<f64, SystemError> {
        self.derivative(i, order)?.eval(x).map_err(|source| SystemError::Eval { index: i, source })
    }

    /// The first `k + 1` functions, sharing interval and derivative order.
    pub fn prefix(&self, k: usize) -> FunctionSystem {
        FunctionSystem { a: self.a, b: self.b, derivs: self.derivs[..=k].to_vec() }
    }

    /// Same system with `g_i` replaced by `sign * g_i`.
    pub fn with_signs(&self, signs: &[i8]) -> FunctionSystem {
        let derivs = self
            .derivs
            .iter()
            .zip(signs.iter().chain(std::iter::repeat(&1)))
            .map(
                |(chain, &s)| {
                    if s < 0 {
                        chain.iter().map(|e| super::expr::neg(e.clone())).collect()
                    } else {
                        chain.clone()
                    }
                },
            )
            .collect();
        FunctionSystem { a: self.a, b: self.b, derivs }
    }

    /// Replaces the last function (the objective).
    pub fn with_objective(&self, objective: Expr) -> Result<FunctionSystem, SystemError> {
        let mut fs: Vec<Expr> = self.functions().cloned().collect();
        *fs.last_mut().expect("nonempty") = objective;
        Self::with_max_order(self.a, self.b, fs, self.max_derivative_order())
    }

    /// Divides every function by `h`. A measure `nu` for the rescaled system
    /// corresponds to `mu` for this one through `d nu = h d mu`, and all
    /// generalized moments agree.
    pub fn rescale(&self, h: &Expr) -> Result<FunctionSystem, SystemError> {
        check_positive(h, self.a, self.b)?;
        let fs = self.functions().map(|g| g.clone() / h.clone()).collect();
        Self::with_max_order(self.a, self.b, fs, self.max_derivative_order())
    }
}

fn grid_point(a: f64, b: f64, j: usize, n: usize) -> f64 {
    if j + 1 == n {
        b
    } else {
        a + (b - a) * (j as f64) / ((n - 1) as f64)
    }
}

fn check_positive(h: &Expr, a: f64, b: f64) -> Result<(), SystemError> {
    let points = (0..RESCALE_CHECK_POINTS).map(|j| grid_point(a, b, j, RESCALE_CHECK_POINTS)).chain([a, b]);
    for x in points {
        let value = h.eval(x).map_err(SystemError::ScaleEval)?;
        if value <= 0.0 {
            return Err(SystemError::NonPositiveScale { x, value });
        }
    }
    Ok(())
}

/// `mu` to `nu`: weights multiplied by `h(x)`.
pub fn push_forward(mu: &AtomicMeasure, h: &Expr) -> Result<AtomicMeasure, EvalError> {
    let atoms = mu
        .atoms()
        .iter()
        .map(|at| Ok((at.node, at.weight * h.eval(at.node)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(AtomicMeasure::from_pairs(atoms))
}

/// `nu` back to `mu`: weights divided by `h(x)`.
pub fn pull_back(nu: &AtomicMeasure, h: &Expr) -> Result<AtomicMeasure, EvalError> {
    let atoms = nu
        .atoms()
        .iter()
        .map(|at| Ok((at.node, at.weight / h.eval(at.node)?)))
        .collect::<Result<Vec<_>, EvalError>>()?;
    Ok(AtomicMeasure::from_pairs(atoms))
}

/// Right-hand side `c` of the moment constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MomentVector(pub Vec<f64>);

impl MomentVector {
    pub fn new(entries: Vec<f64>) -> Self {
        MomentVector(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

impl From<Vec<f64>> for MomentVector {
    fn from(v: Vec<f64>) -> Self {
        MomentVector(v)
    }
}
