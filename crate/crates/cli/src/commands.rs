use std::fmt::Write;

use serde::Serialize;

use tsys::extremal::{bound, objective_independence_check, BoundConfig, BoundReport, NewtonOptions};
use tsys::funcsys::{parse, pull_back};
use tsys::oracle::{oracle_ladder, OracleSolution, DEFAULT_GRID, LADDER};
use tsys::verify::{
    self, check_mplus_wronskian, check_tplus, interior_grid, normalize_signs, SignVector, SimplexSample, Status,
    Verdict, VerifyError,
};
use tsys::{AtomicMeasure, Sense};

use crate::report::{self, num};
use crate::spec::{load_spec, ProblemSpec};
use crate::{Cli, CliError, Command, Exit, Outcome};

/// Support distance below which two extremal measures count as equal.
const COMPARE_TOL: f64 = 1e-6;

pub(crate) fn dispatch(cli: &Cli) -> Result<Outcome, CliError> {
    let path = cli.spec.as_deref().ok_or(CliError::MissingSpec)?;
    let spec = load_spec(path)?;
    match &cli.command {
        Command::Verify => cmd_verify(cli, &spec),
        Command::Bound { sense } => cmd_bound(cli, &spec, *sense),
        Command::Oracle { grids, sense } => cmd_oracle(cli, &spec, *sense, grids.as_deref().unwrap_or(&LADDER)),
        Command::Compare { alt, sense } => cmd_compare(cli, &spec, alt, *sense),
    }
}

fn seed(cli: &Cli, spec: &ProblemSpec) -> u64 {
    cli.seed.or(spec.options.seed).unwrap_or(verify::DEFAULT_SEED)
}

fn config(cli: &Cli, spec: &ProblemSpec) -> BoundConfig {
    let mut newton = NewtonOptions::default();
    if let Some(tol) = cli.tol.or(spec.options.tol) {
        newton.tol = tol;
    }
    BoundConfig {
        grid_size: spec.options.grid.unwrap_or(DEFAULT_GRID),
        seed: seed(cli, spec),
        override_hypothesis: cli.override_hypothesis,
        newton,
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

/// Maps a measure of the rescaled system back to the original one.
fn original(spec: &ProblemSpec, m: &AtomicMeasure) -> Result<AtomicMeasure, CliError> {
    match &spec.options.rescale {
        Some(h) => Ok(pull_back(m, h)?),
        None => Ok(m.clone()),
    }
}

#[derive(Serialize)]
struct VerifyReport {
    result: &'static str,
    levels: Vec<Verdict>,
    wronskian: Verdict,
    /// Signs making the system M+, when it is an M-system with some
    /// negative levels.
    signs: Option<SignVector>,
}

fn cmd_verify(cli: &Cli, spec: &ProblemSpec) -> Result<Outcome, CliError> {
    let sys = spec.system()?;
    let n = sys.len() - 1;
    if n + 1 > 32 {
        return Err(VerifyError::Level { k: n, need: n + 1, len: 32 }.into());
    }
    let seed = seed(cli, spec);
    let levels = (0..=n)
        .map(|k| check_tplus(&sys, k, &SimplexSample::default_for(sys.a(), sys.b(), k, seed)))
        .collect::<Result<Vec<_>, _>>()?;
    let wronskian = check_mplus_wronskian(&sys, n, &interior_grid(sys.a(), sys.b(), verify::DEFAULT_WRONSKIAN_POINTS))?;
    let any = |s: Status| levels.iter().any(|v| v.status == s);
    let signs =
        if any(Status::VerifiedMinus) && !any(Status::Refuted) { normalize_signs(&sys, n, seed).ok() } else { None };
    let exit = if any(Status::Refuted) || any(Status::VerifiedMinus) || wronskian.status == Status::Refuted {
        Exit::Refuted
    } else if any(Status::Inconclusive) || wronskian.status == Status::Inconclusive {
        Exit::Inconclusive
    } else {
        Exit::Success
    };
    let result = match exit {
        Exit::Success => "m+",
        Exit::Inconclusive => "inconclusive",
        _ => "refuted",
    };
    let rep = VerifyReport { result, levels, wronskian, signs };
    let text = if cli.json {
        json(&rep)?
    } else {
        let mut out = String::new();
        for v in &rep.levels {
            let _ = writeln!(out, "{}", report::verdict_line(&format!("level {}", v.level), v));
        }
        let _ = writeln!(out, "{}", report::verdict_line("wronskian", &rep.wronskian));
        if let Some(s) = &rep.signs {
            let signs: Vec<&str> = s.as_slice().iter().map(|&s| if s > 0 { "+" } else { "-" }).collect();
            let _ = writeln!(out, "normalizing signs: {}", signs.join(" "));
        }
        let _ = writeln!(out, "result: {result}");
        out
    };
    Ok(Outcome::new(exit, text))
}

fn pulled_back(spec: &ProblemSpec, mut r: BoundReport) -> Result<BoundReport, CliError> {
    r.measure = original(spec, &r.measure)?;
    Ok(r)
}

fn cmd_bound(cli: &Cli, spec: &ProblemSpec, sense: Sense) -> Result<Outcome, CliError> {
    let sys = spec.system()?;
    let r = pulled_back(spec, bound(&sys, &spec.moments, sense, &config(cli, spec))?)?;
    let text = if cli.json { json(&r)? } else { report::bound(&r) };
    Ok(Outcome::new(Exit::Success, text))
}

#[derive(Serialize)]
struct OracleReport {
    sense: Sense,
    rungs: Vec<OracleSolution>,
}

fn cmd_oracle(cli: &Cli, spec: &ProblemSpec, sense: Sense, grids: &[usize]) -> Result<Outcome, CliError> {
    let sys = spec.system()?;
    let mut rungs = oracle_ladder(&sys, &spec.moments, sense, grids)?;
    for s in &mut rungs {
        s.measure = original(spec, &s.measure)?;
    }
    let text = if cli.json { json(&OracleReport { sense, rungs })? } else { report::oracle(&rungs) };
    Ok(Outcome::new(Exit::Success, text))
}

#[derive(Serialize)]
struct Comparison {
    sense: Sense,
    distance: f64,
    value: f64,
    alt_value: f64,
    measure: AtomicMeasure,
    alt_measure: AtomicMeasure,
}

#[derive(Serialize)]
struct CompareReport {
    alt: String,
    tolerance: f64,
    comparisons: Vec<Comparison>,
}

fn cmd_compare(cli: &Cli, spec: &ProblemSpec, alt: &str, sense: Option<Sense>) -> Result<Outcome, CliError> {
    let alt_expr = parse(alt).map_err(CliError::Alt)?;
    let sys = spec.system()?;
    let alt_expr = match &spec.options.rescale {
        Some(h) => tsys::funcsys::div(alt_expr, h.clone()),
        None => alt_expr,
    };
    let senses = match sense {
        Some(s) => vec![s],
        None => vec![Sense::Max, Sense::Min],
    };
    let cfg = config(cli, spec);
    let mut comparisons = Vec::new();
    for s in senses {
        let r = objective_independence_check(&sys, &spec.moments, &alt_expr, s, &cfg)?;
        comparisons.push(Comparison {
            sense: s,
            distance: r.distance,
            value: r.first.value,
            alt_value: r.second.value,
            measure: original(spec, &r.first.measure)?,
            alt_measure: original(spec, &r.second.measure)?,
        });
    }
    let exit = if comparisons.iter().all(|c| c.distance <= COMPARE_TOL) { Exit::Success } else { Exit::Inconclusive };
    let rep = CompareReport { alt: alt.to_string(), tolerance: COMPARE_TOL, comparisons };
    let text = if cli.json {
        json(&rep)?
    } else {
        let mut out = String::new();
        for c in &rep.comparisons {
            let _ = writeln!(
                out,
                "{}: support distance {} (objective value {}, alternative value {})",
                c.sense.as_str(),
                num(c.distance),
                num(c.value),
                num(c.alt_value)
            );
        }
        let verdict = if exit == Exit::Success { "same extremal measures" } else { "extremal measures differ" };
        let _ = writeln!(out, "result: {verdict} (tolerance {})", num(COMPARE_TOL));
        out
    };
    Ok(Outcome::new(exit, text))
}
