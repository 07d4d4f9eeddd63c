use std::fmt::Write;

use tsys::extremal::{BoundReport, Endpoint};
use tsys::oracle::{ConePosition, OracleSolution};
use tsys::verify::{Method, Status, Verdict};
use tsys::AtomicMeasure;

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| num(*x)).collect();
    format!("[{}]", parts.join(", "))
}

pub fn status(s: Status) -> &'static str {
    match s {
        Status::VerifiedPlus => "verified+",
        Status::VerifiedMinus => "verified-",
        Status::Refuted => "refuted",
        Status::Inconclusive => "inconclusive",
    }
}

pub fn verdict_line(label: &str, v: &Verdict) -> String {
    let method = match v.method {
        Method::DeterminantSampling => match v.seed {
            Some(seed) => format!("{} tuples, seed {seed}", v.sample_size),
            None => format!("{} tuples", v.sample_size),
        },
        Method::Wronskian => format!("wronskian, {} points", v.sample_size),
    };
    let mut line = format!("{label}: {} ({method})", status(v.status));
    match (&v.witness, v.value) {
        (Some(w), Some(val)) if v.method == Method::Wronskian => {
            let _ = write!(line, ", W_0^{} = {} at x = {}", v.level, num(val), num(w[0]));
        }
        (Some(w), Some(val)) => {
            let _ = write!(line, ", determinant {} at {}", num(val), list(w));
        }
        _ => {}
    }
    line
}

pub fn measure(out: &mut String, m: &AtomicMeasure) {
    let _ = writeln!(out, "atoms: {}", m.len());
    for at in m.atoms() {
        let _ = writeln!(out, "  x = {}  w = {}", num(at.node), num(at.weight));
    }
}

pub fn cone(c: &ConePosition) -> String {
    match c {
        ConePosition::StrictlyPositive { margin } => format!("strictly-positive (margin {})", num(*margin)),
        ConePosition::SingularlyPositive { index, .. } => format!("singularly-positive (index {})", index.index()),
        ConePosition::Infeasible { residual } => format!("infeasible (distance {})", num(*residual)),
    }
}

pub fn bound(r: &BoundReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "sense: {}", r.sense.as_str());
    let _ = writeln!(out, "value: {}", num(r.value));
    let _ = writeln!(out, "cone: {}", cone(&r.cone));
    if let Some(t) = &r.template {
        let forced: Vec<&str> = t
            .forced_endpoints
            .iter()
            .map(|e| match e {
                Endpoint::A => "a",
                Endpoint::B => "b",
            })
            .collect();
        let _ = writeln!(out, "template: {} points, forced {{{}}}", t.total_points, forced.join(", "));
    }
    measure(&mut out, &r.measure);
    if !r.pruned.is_empty() {
        let _ = writeln!(out, "pruned zero weights at: {}", list(&r.pruned));
    }
    let _ = writeln!(out, "moment residual: {}", num(r.moment_residual));
    let _ = writeln!(out, "newton iterations: {}", r.newton_iterations);
    let _ = writeln!(
        out,
        "oracle: grid {}, value {}, gap {}, atoms {}",
        r.oracle_grid,
        num(r.oracle_value),
        num(r.oracle_gap),
        r.oracle_atoms
    );
    for v in &r.hypothesis {
        let _ = writeln!(out, "{}", verdict_line(&format!("hypothesis level {}", v.level), v));
    }
    if r.hypothesis_overridden {
        let _ = writeln!(out, "hypothesis overridden");
    }
    out
}

pub fn oracle(rungs: &[OracleSolution]) -> String {
    let mut out = String::new();
    if let Some(first) = rungs.first() {
        let _ = writeln!(out, "sense: {}", first.sense.as_str());
    }
    let _ = writeln!(out, "grid value atoms residual");
    for s in rungs {
        let _ = writeln!(out, "{} {} {} {}", s.grid_size, num(s.value), s.measure.len(), num(s.max_scaled_residual));
    }
    out
}
