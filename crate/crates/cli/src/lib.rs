//! Library side of the `tsys` command: argument parsing, problem files and
//! report rendering. [`run`] returns the exit code and both output streams so
//! that the binary stays a thin wrapper.

mod commands;
mod report;
pub mod spec;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use tsys::extremal::BoundError;
use tsys::funcsys::{EvalError, ParseError, SystemError};
use tsys::oracle::simplex::LpError;
use tsys::oracle::OracleError;
use tsys::verify::VerifyError;
use tsys::Sense;

pub use spec::{load_spec, parse_spec, ProblemSpec, SpecError};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Usage = 1,
    Refuted = 2,
    Inconclusive = 3,
    Infeasible = 4,
    NoConvergence = 5,
}

#[derive(Debug, Parser)]
#[command(name = "tsys", version, about = "Tchebycheff-system checks and sharp generalized-moment bounds")]
pub struct Cli {
    /// Problem file (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub spec: Option<PathBuf>,
    /// Sampling seed; overrides the problem file.
    #[arg(long, global = true, env = "TSYS_SEED", value_name = "U64")]
    pub seed: Option<u64>,
    /// Newton convergence tolerance on the scaled moment residual.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tol: Option<f64>,
    /// Print a single JSON report instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Continue when the T+ hypothesis is not verified.
    #[arg(long = "override", global = true)]
    pub override_hypothesis: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the T+/M+ structure of the functions and the objective.
    Verify,
    /// Compute the maximum or minimum of the objective moment.
    Bound {
        #[arg(long, value_name = "max|min")]
        sense: Sense,
    },
    /// Solve the grid LP on a ladder of grids.
    Oracle {
        #[arg(long, value_delimiter = ',', value_name = "N1,N2,...")]
        grids: Option<Vec<usize>>,
        #[arg(long, default_value = "max", value_name = "max|min")]
        sense: Sense,
    },
    /// Compare extremal measures for the objective and an alternative one.
    Compare {
        #[arg(long, value_name = "EXPR")]
        alt: String,
        /// Defaults to both senses.
        #[arg(long, value_name = "max|min")]
        sense: Option<Sense>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("--spec PATH is required")]
    MissingSpec,
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("--alt: {0}")]
    Alt(ParseError),
    #[error("{0}")]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("JSON output failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit(&self) -> Exit {
        match self {
            CliError::Bound(e) => match e {
                BoundError::Infeasible { .. } => Exit::Infeasible,
                BoundError::HypothesisNotVerified(_) | BoundError::NoCertificate { .. } => Exit::Refuted,
                BoundError::NoConvergence(_) => Exit::NoConvergence,
                BoundError::Oracle(OracleError::Lp(LpError::Infeasible { .. })) => Exit::Infeasible,
                _ => Exit::Usage,
            },
            CliError::Oracle(OracleError::Lp(LpError::Infeasible { .. })) => Exit::Infeasible,
            _ => Exit::Usage,
        }
    }
}

/// Everything a command produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn new(exit: Exit, stdout: String) -> Self {
        Outcome { code: exit as i32, stdout, stderr: String::new() }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome { code: Exit::Usage as i32, stdout: String::new(), stderr: text }
            } else {
                Outcome { code: Exit::Success as i32, stdout: text, stderr: String::new() }
            };
        }
    };
    match commands::dispatch(&cli) {
        Ok(out) => out,
        Err(e) => Outcome { code: e.exit() as i32, stdout: String::new(), stderr: format!("error: {e}\n") },
    }
}
