//! Problem files.
//!
//! ```json
//! {
//!   "interval": [0, 1],
//!   "functions": ["1", "x"],
//!   "objective": "x^2",
//!   "moments": [1, 0.5],
//!   "options": { "grid": 4097, "seed": 7, "tol": 1e-12, "rescale": "1 + x" }
//! }
//! ```
//!
//! `options` and each of its keys are optional.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use tsys::funcsys::{parse, Expr, FunctionSystem, MomentVector, ParseError, SystemError};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{field}: {source}")]
    Expression { field: String, source: ParseError },
    #[error("{functions} constrained functions but {moments} moments")]
    Arity { functions: usize, moments: usize },
    #[error("invalid interval [{a}, {b}]")]
    Interval { a: f64, b: f64 },
    #[error("at least one constrained function is required")]
    NoFunctions,
    #[error("grid must have at least 2 nodes, got {0}")]
    Grid(usize),
    #[error(transparent)]
    System(#[from] SystemError),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    interval: [f64; 2],
    functions: Vec<String>,
    objective: String,
    moments: Vec<f64>,
    #[serde(default)]
    options: RawOptions,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOptions {
    grid: Option<usize>,
    seed: Option<u64>,
    tol: Option<f64>,
    rescale: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SpecOptions {
    pub grid: Option<usize>,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub rescale: Option<Expr>,
}

/// A validated problem: `g_0..g_n`, the objective `g_{n+1}`, and `c`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub a: f64,
    pub b: f64,
    pub functions: Vec<Expr>,
    pub objective: Expr,
    pub moments: MomentVector,
    pub options: SpecOptions,
}

pub fn load_spec(path: &Path) -> Result<ProblemSpec, SpecError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    parse_spec(&text)
}

pub fn parse_spec(text: &str) -> Result<ProblemSpec, SpecError> {
    let raw: RawSpec = serde_json::from_str(text).map_err(|e| SpecError::Syntax {
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })?;
    let [a, b] = raw.interval;
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(SpecError::Interval { a, b });
    }
    if raw.functions.is_empty() {
        return Err(SpecError::NoFunctions);
    }
    if raw.functions.len() != raw.moments.len() {
        return Err(SpecError::Arity { functions: raw.functions.len(), moments: raw.moments.len() });
    }
    let expr = |field: String, src: &str| parse(src).map_err(|source| SpecError::Expression { field, source });
    let functions = raw
        .functions
        .iter()
        .enumerate()
        .map(|(i, s)| expr(format!("functions[{i}]"), s))
        .collect::<Result<Vec<_>, _>>()?;
    let objective = expr("objective".into(), &raw.objective)?;
    let rescale = raw.options.rescale.as_deref().map(|s| expr("options.rescale".into(), s)).transpose()?;
    if let Some(n) = raw.options.grid {
        if n < 2 {
            return Err(SpecError::Grid(n));
        }
    }
    let spec = ProblemSpec {
        a,
        b,
        functions,
        objective,
        moments: MomentVector::new(raw.moments),
        options: SpecOptions { grid: raw.options.grid, seed: raw.options.seed, tol: raw.options.tol, rescale },
    };
    spec.system()?;
    Ok(spec)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

impl ProblemSpec {
    /// Number of constrained functions, `n + 1`.
    pub fn constraints(&self) -> usize {
        self.functions.len()
    }

    /// `g_0..g_{n+1}`, divided by the rescale function if one is set.
    pub fn system(&self) -> Result<FunctionSystem, SystemError> {
        let mut all = self.functions.clone();
        all.push(self.objective.clone());
        let sys = FunctionSystem::new(self.a, self.b, all)?;
        match &self.options.rescale {
            Some(h) => sys.rescale(h),
            None => Ok(sys),
        }
    }
}
