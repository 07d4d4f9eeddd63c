//! Expression trees over a single real variable `x`.
//!
//! The grammar is closed under differentiation: every node kind has a
//! derivative rule that produces nodes of the same grammar.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Unary functions allowed in expressions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Neg(Arc<Expr>),
    Add(Arc<Expr>, Arc<Expr>),
    Sub(Arc<Expr>, Arc<Expr>),
    Mul(Arc<Expr>, Arc<Expr>),
    Div(Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Call(Func, Arc<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log of non-positive argument {arg} at x = {x}")]
    LogDomain { x: f64, arg: f64 },
    #[error("sqrt of negative argument {arg} at x = {x}")]
    SqrtDomain { x: f64, arg: f64 },
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

// Smart constructors. They fold constants and drop neutral elements so that
// repeated differentiation does not blow up; they never change the value.

pub fn num(v: f64) -> Expr {
    Expr::Num(v)
}

pub fn var() -> Expr {
    Expr::X
}

pub fn neg(e: Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => Arc::unwrap_or_clone(inner),
        e => Expr::Neg(Arc::new(e)),
    }
}

pub fn add(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Num(a), Expr::Num(b)) => Expr::Num(a + b),
        (Expr::Num(a), _) if *a == 0.0 => r,
        (_, Expr::Num(b)) if *b == 0.0 => l,
        (_, Expr::Neg(inner)) => Expr::Sub(Arc::new(l), inner.clone()),
        _ => Expr::Add(Arc::new(l), Arc::new(r)),
    }
}

pub fn sub(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Num(a), Expr::Num(b)) => Expr::Num(a - b),
        (Expr::Num(a), _) if *a == 0.0 => neg(r),
        (_, Expr::Num(b)) if *b == 0.0 => l,
        _ => Expr::Sub(Arc::new(l), Arc::new(r)),
    }
}

pub fn mul(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Num(a), Expr::Num(b)) => Expr::Num(a * b),
        (Expr::Num(a), _) | (_, Expr::Num(a)) if *a == 0.0 => Expr::Num(0.0),
        (Expr::Num(a), _) if *a == 1.0 => r,
        (_, Expr::Num(b)) if *b == 1.0 => l,
        (Expr::Num(a), _) if *a == -1.0 => neg(r),
        (_, Expr::Num(b)) if *b == -1.0 => neg(l),
        // keep constants on the left so folding can find them
        (_, Expr::Num(_)) => Expr::Mul(Arc::new(r), Arc::new(l)),
        _ => Expr::Mul(Arc::new(l), Arc::new(r)),
    }
}

pub fn div(l: Expr, r: Expr) -> Expr {
    match (&l, &r) {
        (Expr::Num(a), Expr::Num(b)) if *b != 0.0 => Expr::Num(a / b),
        (Expr::Num(a), _) if *a == 0.0 => Expr::Num(0.0),
        (_, Expr::Num(b)) if *b == 1.0 => l,
        _ => Expr::Div(Arc::new(l), Arc::new(r)),
    }
}

pub fn pow(base: Expr, k: i32) -> Expr {
    match (&base, k) {
        (_, 0) => Expr::Num(1.0),
        (_, 1) => base,
        (Expr::Num(v), _) if *v != 0.0 || k > 0 => Expr::Num(v.powi(k)),
        (Expr::Pow(inner, j), _) => match j.checked_mul(k) {
            Some(jk) => pow(inner.as_ref().clone(), jk),
            None => Expr::Pow(Arc::new(base), k),
        },
        _ => Expr::Pow(Arc::new(base), k),
    }
}

pub fn call(f: Func, arg: Expr) -> Expr {
    Expr::Call(f, Arc::new(arg))
}

impl Expr {
    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        let v = self.eval_raw(x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { x })
        }
    }

    fn eval_raw(&self, x: f64) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Num(v) => *v,
            Expr::X => x,
            Expr::Neg(e) => -e.eval_raw(x)?,
            Expr::Add(l, r) => l.eval_raw(x)? + r.eval_raw(x)?,
            Expr::Sub(l, r) => l.eval_raw(x)? - r.eval_raw(x)?,
            Expr::Mul(l, r) => l.eval_raw(x)? * r.eval_raw(x)?,
            Expr::Div(l, r) => {
                let den = r.eval_raw(x)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                l.eval_raw(x)? / den
            }
            Expr::Pow(base, k) => {
                let b = base.eval_raw(x)?;
                if b == 0.0 && *k < 0 {
                    return Err(EvalError::DivisionByZero { x });
                }
                b.powi(*k)
            }
            Expr::Call(f, arg) => {
                let u = arg.eval_raw(x)?;
                match f {
                    Func::Exp => u.exp(),
                    Func::Log => {
                        if u <= 0.0 {
                            return Err(EvalError::LogDomain { x, arg: u });
                        }
                        u.ln()
                    }
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Sqrt => {
                        if u < 0.0 {
                            return Err(EvalError::SqrtDomain { x, arg: u });
                        }
                        u.sqrt()
                    }
                }
            }
        })
    }

    /// First derivative with respect to `x`.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Num(_) => num(0.0),
            Expr::X => num(1.0),
            Expr::Neg(e) => neg(e.derivative()),
            Expr::Add(l, r) => add(l.derivative(), r.derivative()),
            Expr::Sub(l, r) => sub(l.derivative(), r.derivative()),
            Expr::Mul(l, r) => add(mul(l.derivative(), r.as_ref().clone()), mul(l.as_ref().clone(), r.derivative())),
            Expr::Div(l, r) => {
                // (u/v)' = u'/v - u v' / v^2
                let (u, v) = (l.as_ref().clone(), r.as_ref().clone());
                sub(div(l.derivative(), v.clone()), div(mul(u, r.derivative()), pow(v, 2)))
            }
            Expr::Pow(base, k) => mul(mul(num(*k as f64), pow(base.as_ref().clone(), k - 1)), base.derivative()),
            Expr::Call(f, arg) => {
                let u = arg.as_ref().clone();
                let du = arg.derivative();
                let outer = match f {
                    Func::Exp => call(Func::Exp, u),
                    Func::Log => return div(du, u),
                    Func::Sin => call(Func::Cos, u),
                    Func::Cos => neg(call(Func::Sin, u)),
                    Func::Sqrt => return div(du, mul(num(2.0), call(Func::Sqrt, u))),
                };
                mul(outer, du)
            }
        }
    }

    /// `order`-th derivative; order 0 returns a clone of `self`.
    pub fn differentiate(&self, order: usize) -> Expr {
        let mut e = self.clone();
        for _ in 0..order {
            e = e.derivative();
        }
        e
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::X => 1,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => 1 + e.size(),
            Expr::Add(l, r) | Expr::Sub(l, r) | Expr::Mul(l, r) | Expr::Div(l, r) => 1 + l.size() + r.size(),
        }
    }
}

impl std::ops::Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        div(self, rhs)
    }
}

/// Fully parenthesized output. Re-parsing the printed text yields a
/// structurally identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) if v.is_sign_negative() => write!(f, "({v:?})"),
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::X => f.write_str("x"),
            Expr::Neg(e) => write!(f, "(-({e}))"),
            Expr::Add(l, r) => write!(f, "({l} + {r})"),
            Expr::Sub(l, r) => write!(f, "({l} - {r})"),
            Expr::Mul(l, r) => write!(f, "({l} * {r})"),
            Expr::Div(l, r) => write!(f, "({l} / {r})"),
            Expr::Pow(base, k) => write!(f, "({base})^{k}"),
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
        }
    }
}
