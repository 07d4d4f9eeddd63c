//! Function systems: closed-form expressions, symbolic derivatives, and the
//! `d nu = h d mu` rescaling.

mod expr;
mod parse;
mod system;

pub use expr::{add, call, div, mul, neg, num, pow, sub, var, EvalError, Expr, Func};
pub use parse::{parse, ParseError};
pub use system::{pull_back, push_forward, FunctionSystem, MomentVector, SystemError, RESCALE_CHECK_POINTS};
