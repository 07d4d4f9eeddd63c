//! T+/M+ structure checks.
//!
//! Two routes: sampling the generalized Vandermonde determinant
//! `det(g_i(x_j))` over ordered node tuples, and the Wronskian criterion
//! (`g_0 > 0` and `W_0^k > 0` inside the interval is sufficient for M+,
//! `W_0^k >= 0` is necessary). Both are sampling-based: a positive verdict
//! means "consistent with T+ on this sample", never a proof.

mod certificate;
mod sample;

use serde::Serialize;
use thiserror::Error;

pub use certificate::{positivity_certificate, PositivityCertificate};
pub use sample::{SimplexSample, Strategy, COARSE_GRID_POINTS, RANDOM_TUPLES, STRATIFIED_TUPLES};

use crate::funcsys::{FunctionSystem, SystemError};
use crate::linalg;
use crate::oracle::simplex::LpError;

/// Relative threshold below which a determinant or Wronskian counts as
/// vanishing.
pub const ZERO_TOL: f64 = 1e-9;
/// Wronskians are checked on `[a + eps, b - eps]`, `eps = 1e-6 (b - a)`.
pub const ENDPOINT_MARGIN: f64 = 1e-6;
pub const DEFAULT_WRONSKIAN_POINTS: usize = 2001;
pub const DEFAULT_SEED: u64 = 0x5eed;

const SCALE_POINTS: usize = 257;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("nodes {0:?} are not strictly increasing inside the interval")]
    BadNodes(Vec<f64>),
    #[error("level {k} needs {need} functions, system has {len}")]
    Level { k: usize, need: usize, len: usize },
    #[error("point {x} is outside the interval [{a}, {b}]")]
    PointOutside { x: f64, a: f64, b: f64 },
    #[error("sample is empty")]
    EmptySample,
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("not an M-system: level {level} is {status:?}", level = .0.level, status = .0.status)]
    NotMSystem(Box<Verdict>),
    #[error("no positivity certificate on this grid (best margin {margin:.3e})")]
    NoCertificate { margin: f64 },
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    VerifiedPlus,
    VerifiedMinus,
    Refuted,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    DeterminantSampling,
    Wronskian,
}

/// Outcome of one check, also the report record for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub level: usize,
    pub status: Status,
    /// Node tuple (a single point for Wronskians) behind a negative or
    /// vanishing value. Always present for `Refuted`.
    pub witness: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub method: Method,
    pub sample_size: usize,
    pub seed: Option<u64>,
}

/// Signs `s_i` in `{-1, +1}` making `(s_0 g_0, ..., s_n g_n)` sample as M+.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn all_positive(&self) -> bool {
        self.0.iter().all(|&s| s == 1)
    }
}

fn check_level(sys: &FunctionSystem, k: usize) -> Result<(), VerifyError> {
    if k >= sys.len() {
        return Err(VerifyError::Level { k, need: k + 1, len: sys.len() });
    }
    Ok(())
}

/// `det(g_i(x_j))` for `i, j` in `0..=k`, rows indexed by function.
pub fn system_determinant(sys: &FunctionSystem, k: usize, nodes: &[f64]) -> Result<f64, VerifyError> {
    check_level(sys, k)?;
    if nodes.len() != k + 1 {
        return Err(VerifyError::BadNodes(nodes.to_vec()));
    }
    sample::check_tuple(sys.a(), sys.b(), nodes)?;
    raw_determinant(sys, k, nodes)
}

fn raw_determinant(sys: &FunctionSystem, k: usize, nodes: &[f64]) -> Result<f64, VerifyError> {
    let n = k + 1;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for (j, &x) in nodes.iter().enumerate() {
            m[i * n + j] = sys.eval(i, x)?;
        }
    }
    Ok(linalg::determinant(&m, n))
}

/// `W_0^k(x) = det(g_i^{(j)}(x))` for `i, j` in `0..=k`. `W_0^0 = g_0`.
pub fn wronskian(sys: &FunctionSystem, k: usize, x: f64) -> Result<f64, VerifyError> {
    check_level(sys, k)?;
    if !(x >= sys.a() && x <= sys.b()) {
        return Err(VerifyError::PointOutside { x, a: sys.a(), b: sys.b() });
    }
    if k == 0 {
        return Ok(sys.eval(0, x)?);
    }
    let n = k + 1;
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            m[i * n + j] = sys.eval_derivative(i, j, x)?;
        }
    }
    Ok(linalg::determinant(&m, n))
}

/// Max of `|g_i|` over a uniform sample, per function.
fn value_scales(sys: &FunctionSystem, k: usize) -> Result<Vec<f64>, VerifyError> {
    let pts = sample::uniform(sys.a(), sys.b(), SCALE_POINTS);
    (0..=k).map(|i| pts.iter().try_fold(0.0_f64, |m, &x| Ok(m.max(sys.eval(i, x)?.abs())))).collect()
}

/// Vandermonde product of the nodes mapped to `[0, 1]`.
fn unit_vandermonde(a: f64, b: f64, nodes: &[f64]) -> f64 {
    let t: Vec<f64> = nodes.iter().map(|x| (x - a) / (b - a)).collect();
    let mut v = 1.0;
    for j in 1..t.len() {
        for i in 0..j {
            v *= t[j] - t[i];
        }
    }
    v
}

/// Samples the sign of `det(g_i(x_j))_0^k`.
///
/// The determinant is compared against zero after dividing by the
/// Vandermonde product of the nodes rescaled to `[0, 1]`, since any smooth
/// system's determinant shrinks like that product as nodes approach each
/// other. Values within `ZERO_TOL * prod_i max|g_i|` of zero count as
/// vanishing.
pub fn check_tplus(sys: &FunctionSystem, k: usize, sample: &SimplexSample) -> Result<Verdict, VerifyError> {
    check_level(sys, k)?;
    if sample.is_empty() {
        return Err(VerifyError::EmptySample);
    }
    let (a, b) = (sys.a(), sys.b());
    let tol = ZERO_TOL * value_scales(sys, k)?.iter().product::<f64>();
    let mut verdict = Verdict {
        level: k,
        status: Status::VerifiedPlus,
        witness: None,
        value: None,
        method: Method::DeterminantSampling,
        sample_size: sample.len(),
        seed: sample.seed(),
    };
    let mut first_sign = 0.0;
    for t in &sample.tuples {
        if t.len() != k + 1 {
            return Err(VerifyError::BadNodes(t.clone()));
        }
        sample::check_tuple(a, b, t)?;
        let det = raw_determinant(sys, k, t)?;
        let q = det / unit_vandermonde(a, b, t);
        if q.is_nan() || q.abs() <= tol {
            verdict.status = Status::Refuted;
            verdict.witness = Some(t.clone());
            verdict.value = Some(det);
            return Ok(verdict);
        }
        if first_sign == 0.0 {
            first_sign = q.signum();
        } else if q.signum() != first_sign {
            verdict.status = Status::Refuted;
            verdict.witness = Some(t.clone());
            verdict.value = Some(det);
            return Ok(verdict);
        }
    }
    if first_sign < 0.0 {
        verdict.status = Status::VerifiedMinus;
    }
    Ok(verdict)
}

/// Uniform points on `[a + eps, b - eps]`.
pub fn interior_grid(a: f64, b: f64, points: usize) -> Vec<f64> {
    let eps = ENDPOINT_MARGIN * (b - a);
    sample::uniform(a + eps, b - eps, points)
}

/// Wronskian criterion for the M+ property of `(g_0, ..., g_n)`.
///
/// `VerifiedPlus` when `g_0` is positive on the grid and both endpoints and
/// every `W_0^k`, `k = 1..=n`, is positive on the interior grid. `Refuted`
/// when some `W_0^k` (including `g_0`) is negative inside the interval.
/// `Inconclusive` when nothing is negative but some value vanishes.
///
/// Derivatives are taken with respect to `(x - a) / (b - a)` for the
/// vanishing threshold, so the test does not depend on the interval length.
pub fn check_mplus_wronskian(sys: &FunctionSystem, n: usize, grid: &[f64]) -> Result<Verdict, VerifyError> {
    check_level(sys, n)?;
    let (a, b) = (sys.a(), sys.b());
    if let Some(&x) = grid.iter().find(|&&x| !(x > a && x < b)) {
        return Err(VerifyError::PointOutside { x, a, b });
    }
    let len = b - a;
    let mut verdict = Verdict {
        level: n,
        status: Status::VerifiedPlus,
        witness: None,
        value: None,
        method: Method::Wronskian,
        sample_size: grid.len(),
        seed: None,
    };

    // derivative tables d[p][i][j] = g_i^{(j)}(x_p) * len^j
    let dim = n + 1;
    let mut tables = Vec::with_capacity(grid.len());
    for &x in grid {
        let mut t = vec![0.0; dim * dim];
        for i in 0..dim {
            let mut f = 1.0;
            for j in 0..dim {
                t[i * dim + j] = sys.eval_derivative(i, j, x)? * f;
                f *= len;
            }
        }
        tables.push(t);
    }

    let mut inconclusive: Option<(usize, f64, f64)> = None;

    // g_0 on the closed interval
    let mut g0_points: Vec<f64> = grid.to_vec();
    g0_points.extend([a, b]);
    let g0: Vec<f64> = g0_points.iter().map(|&x| sys.eval(0, x)).collect::<Result<_, _>>()?;
    let tol0 = ZERO_TOL * g0.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    for (&x, &v) in g0_points.iter().zip(&g0) {
        if v < -tol0 {
            verdict.level = 0;
            verdict.status = Status::Refuted;
            verdict.witness = Some(vec![x]);
            verdict.value = Some(v);
            return Ok(verdict);
        }
        if v.abs() <= tol0 && inconclusive.is_none() {
            inconclusive = Some((0, x, v));
        }
    }

    for k in 1..=n {
        let kd = k + 1;
        // per-function scale: max over points and orders <= k
        let mut scale = vec![0.0_f64; kd];
        for t in &tables {
            for (i, s) in scale.iter_mut().enumerate() {
                for j in 0..kd {
                    *s = s.max(t[i * dim + j].abs());
                }
            }
        }
        let tol = ZERO_TOL * scale.iter().product::<f64>();
        for (p, t) in tables.iter().enumerate() {
            let sub: Vec<f64> = (0..kd).flat_map(|i| (0..kd).map(move |j| t[i * dim + j])).collect();
            let w = linalg::determinant(&sub, kd);
            if w < -tol {
                verdict.level = k;
                verdict.status = Status::Refuted;
                verdict.witness = Some(vec![grid[p]]);
                // report the Wronskian in x, not in the rescaled variable
                verdict.value = Some(w / len.powi((k * (k + 1) / 2) as i32));
                return Ok(verdict);
            }
            if w.abs() <= tol && inconclusive.is_none() {
                inconclusive = Some((k, grid[p], w / len.powi((k * (k + 1) / 2) as i32)));
            }
        }
    }
    if let Some((k, x, v)) = inconclusive {
        verdict.level = k;
        verdict.status = Status::Inconclusive;
        verdict.witness = Some(vec![x]);
        verdict.value = Some(v);
    }
    Ok(verdict)
}

/// Finds signs turning an M-system into an M+-system, level by level: `s_k`
/// flips exactly when the level-`k` determinants sample negative with
/// `s_0, ..., s_{k-1}` already applied.
pub fn normalize_signs(sys: &FunctionSystem, n: usize, seed: u64) -> Result<SignVector, VerifyError> {
    check_level(sys, n)?;
    let mut signs: Vec<i8> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let signed = sys.prefix(k).with_signs(&signs);
        let sample = SimplexSample::default_for(sys.a(), sys.b(), k, seed);
        let v = check_tplus(&signed, k, &sample)?;
        match v.status {
            Status::VerifiedPlus => signs.push(1),
            Status::VerifiedMinus => signs.push(-1),
            _ => return Err(VerifyError::NotMSystem(Box::new(v))),
        }
    }
    Ok(SignVector(signs))
}
