//! Tchebycheff and Markov systems on a closed interval, and sharp bounds on a
//! generalized moment over nonnegative measures with prescribed moments.
//!
//! - [`funcsys`]: closed-form function systems with symbolic derivatives.
//! - [`verify`]: T+/M+ checks by determinant sampling and Wronskians.
//! - [`oracle`]: grid LP oracle with an in-repo simplex.
//! - [`extremal`]: extremal measures from support templates and Newton.

pub mod extremal;
pub mod funcsys;
mod linalg;
pub mod measure;
pub mod oracle;
pub mod verify;

use serde::{Deserialize, Serialize};

pub use measure::{Atom, AtomicMeasure};

/// Direction of optimization of the objective moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    pub fn as_str(self) -> &'static str {
        match self {
            Sense::Max => "max",
            Sense::Min => "min",
        }
    }
}

impl std::str::FromStr for Sense {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(Sense::Max),
            "min" => Ok(Sense::Min),
            other => Err(format!("unknown sense `{other}` (expected max or min)")),
        }
    }
}
