//! Acceptance checks, one pass/fail line per criterion.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsys::extremal::{bound, make_template, objective_independence_check, BoundConfig, BoundReport, Endpoint};
use tsys::funcsys::{parse, FunctionSystem, MomentVector};
use tsys::oracle::{make_grid, solve_grid_lp, ConePosition};
use tsys::verify::{self, check_mplus_wronskian, interior_grid, wronskian, SimplexSample, Status};
use tsys::{AtomicMeasure, Sense};

type Check = Result<String, String>;

fn system(a: f64, b: f64, srcs: &[&str]) -> FunctionSystem {
    FunctionSystem::new(a, b, srcs.iter().map(|s| parse(s).unwrap()).collect()).unwrap()
}

fn monomials(n: usize) -> FunctionSystem {
    let srcs: Vec<String> = (0..=n).map(|k| format!("x^{k}")).collect();
    let refs: Vec<&str> = srcs.iter().map(String::as_str).collect();
    system(0.0, 1.0, &refs)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_bound(sys: &FunctionSystem, c: &[f64], sense: Sense) -> Result<BoundReport, String> {
    bound(sys, &MomentVector::new(c.to_vec()), sense, &BoundConfig::default()).map_err(|e| format!("{sense:?}: {e}"))
}

fn single_atom(r: &BoundReport, node: f64, weight: f64, tol: f64) -> bool {
    r.measure.len() == 1 && (r.measure.nodes()[0] - node).abs() <= tol && (r.measure.weights()[0] - weight).abs() <= tol
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let sys = system(0.0, 1.0, &["1", "x"]);
    let max = run_bound(&sys, &[1.0], Sense::Max)?;
    let min = run_bound(&sys, &[1.0], Sense::Min)?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure((max.value - 1.0).abs() <= 1e-12 && single_atom(&max, 1.0, 1.0, 1e-12), || {
        format!("max {} at {:?}", max.value, max.measure)
    })?;
    ensure(min.value.abs() <= 1e-12 && single_atom(&min, 0.0, 1.0, 1e-12), || {
        format!("min {} at {:?}", min.value, min.measure)
    })?;
    ensure(elapsed < 1.0, || format!("runtime {elapsed:.3} s"))?;
    Ok(format!("max 1 at (1,1), min 0 at (0,1), {elapsed:.3} s"))
}

fn criterion_2() -> Check {
    let mut worst: f64 = 0.0;
    for (a, b, c0, c1) in [(0.0, 1.0, 1.0, 0.5), (-1.0, 2.0, 2.0, 1.0), (0.0, 1.0, 3.0, 0.6)] {
        let sys = system(a, b, &["1", "x", "x^2"]);
        let max = run_bound(&sys, &[c0, c1], Sense::Max)?;
        let min = run_bound(&sys, &[c0, c1], Sense::Min)?;
        let wa = (c0 * b - c1) / (b - a);
        let wb = (c1 - c0 * a) / (b - a);
        ensure(max.measure.nodes() == vec![a, b], || format!("max support {:?}", max.measure))?;
        let w = max.measure.weights();
        worst = worst.max((w[0] - wa).abs()).max((w[1] - wb).abs());
        let value = wa * a * a + wb * b * b;
        ensure((max.value - value).abs() <= 1e-10, || format!("max value {} vs {value}", max.value))?;
        let mean = c1 / c0;
        ensure(single_atom(&min, mean, c0, 1e-10), || format!("min measure {:?}", min.measure))?;
        ensure((min.value - c0 * mean * mean).abs() <= 1e-10, || format!("min value {}", min.value))?;
        if (a, b, c0, c1) == (0.0, 1.0, 1.0, 0.5) {
            ensure((max.value - 0.5).abs() <= 1e-12 && (min.value - 0.25).abs() <= 1e-12, || {
                format!("values {} {}", max.value, min.value)
            })?;
        }
    }
    ensure(worst <= 1e-10, || format!("weight error {worst:.2e}"))?;
    let sys = system(0.0, 1.0, &["1", "x", "x^2"]);
    for sense in [Sense::Max, Sense::Min] {
        let r = run_bound(&sys, &[0.0, 0.0], sense)?;
        ensure(r.measure.is_empty() && r.value == 0.0, || format!("c0 = 0 gave {:?}", r.measure))?;
    }
    Ok(format!("max 0.5 on {{0,1}}, min 0.25 at 0.5, weight error {worst:.1e}, c0 = 0 gives zero measure"))
}

const UNIFORM: [f64; 4] = [1.0, 0.5, 1.0 / 3.0, 0.25];

/// Criteria 3 and 6 share the oracle solves.
fn criterion_3(atoms: &mut Vec<(usize, usize)>) -> Check {
    let start = Instant::now();
    let sys = monomials(4);
    let grid = make_grid(0.0, 1.0, 16385).unwrap();
    let mut gaps = Vec::new();
    let mut worst_res: f64 = 0.0;
    for sense in [Sense::Max, Sense::Min] {
        let r = run_bound(&sys, &UNIFORM, sense)?;
        atoms.push((r.oracle_atoms, 4));
        let oracle =
            solve_grid_lp(&sys, &MomentVector::new(UNIFORM.to_vec()), &grid, sense).map_err(|e| e.to_string())?;
        atoms.push((oracle.measure.len(), 4));
        let gap = (r.value - oracle.value).abs();
        gaps.push(gap);
        worst_res = worst_res.max(r.moment_residual);
        ensure(gap <= 1e-4, || format!("{sense:?}: newton {} oracle {}", r.value, oracle.value))?;
        ensure(r.moment_residual <= 1e-12, || format!("{sense:?}: residual {:.2e}", r.moment_residual))?;
    }
    let elapsed = start.elapsed().as_secs_f64();
    ensure(elapsed < 30.0, || format!("runtime {elapsed:.1} s"))?;
    Ok(format!("gaps max {:.1e} min {:.1e} at N=16385, residual {worst_res:.1e}, {elapsed:.2} s", gaps[0], gaps[1]))
}

fn criterion_4() -> Check {
    let sys = monomials(4);
    let alt = parse("exp(x)").unwrap();
    let c = MomentVector::new(UNIFORM.to_vec());
    let mut out = Vec::new();
    for sense in [Sense::Max, Sense::Min] {
        let r = objective_independence_check(&sys, &c, &alt, sense, &BoundConfig::default())
            .map_err(|e| format!("{sense:?}: {e}"))?;
        ensure(r.distance <= 1e-6, || format!("{sense:?}: distance {:.2e}", r.distance))?;
        out.push(r.distance);
    }
    Ok(format!("support distance max {:.1e} min {:.1e}", out[0], out[1]))
}

fn random_moments(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let atoms: Vec<(f64, f64)> = (0..10).map(|_| (rng.gen_range(0.0..=1.0), rng.gen_range(0.05..1.0))).collect();
    let mu = AtomicMeasure::from_pairs(atoms);
    (0..=n).map(|k| mu.integrate(|x| Ok::<_, ()>(x.powi(k as i32))).unwrap()).collect()
}

fn template_violation(r: &BoundReport, n: usize, sense: Sense) -> Option<String> {
    let t = make_template(n, sense);
    if r.measure.len() > t.total_points {
        return Some(format!("{} atoms > {}", r.measure.len(), t.total_points));
    }
    let nodes = r.measure.nodes();
    for e in &t.forced_endpoints {
        let x = match e {
            Endpoint::A => 0.0,
            Endpoint::B => 1.0,
        };
        if !nodes.contains(&x) && !r.pruned_endpoints.contains(e) {
            return Some(format!("forced endpoint {x} missing and not flagged"));
        }
    }
    if !r.pruned_endpoints.is_empty() && r.pruned.is_empty() {
        return Some("endpoint flagged without pruning".into());
    }
    None
}

fn criterion_5(atoms: &mut Vec<(usize, usize)>) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_251);
    let mut pruned = 0;
    for trial in 0..50 {
        let n = 1 + trial % 4;
        let sys = monomials(n + 1);
        let c = random_moments(&mut rng, n);
        let max = run_bound(&sys, &c, Sense::Max).map_err(|e| format!("trial {trial} n={n}: {e}"))?;
        let min = run_bound(&sys, &c, Sense::Min).map_err(|e| format!("trial {trial} n={n}: {e}"))?;
        for (r, sense) in [(&max, Sense::Max), (&min, Sense::Min)] {
            ensure(matches!(r.cone, ConePosition::StrictlyPositive { .. }), || {
                format!("trial {trial}: not strict ({})", r.cone.name())
            })?;
            if let Some(v) = template_violation(r, n, sense) {
                return Err(format!("trial {trial} n={n} {sense:?}: {v}"));
            }
            ensure(r.moment_residual <= 1e-9, || format!("trial {trial}: residual {:.2e}", r.moment_residual))?;
            atoms.push((r.oracle_atoms, n + 1));
            pruned += r.pruned.len();
        }
        ensure(min.value <= max.value + 1e-10, || format!("trial {trial}: min {} > max {}", min.value, max.value))?;
    }
    Ok(format!("50 instances conform, min <= max, {pruned} zero weights pruned"))
}

fn criterion_6(atoms: &[(usize, usize)]) -> Check {
    ensure(!atoms.is_empty(), || "no oracle solves recorded".into())?;
    if let Some((got, bound)) = atoms.iter().find(|(got, bound)| got > bound) {
        return Err(format!("oracle returned {got} atoms, bound {bound}"));
    }
    let most = atoms.iter().map(|p| p.0).max().unwrap_or(0);
    Ok(format!("{} oracle solves, largest support {most}", atoms.len()))
}

fn criterion_7() -> Check {
    let sys = monomials(3);
    let c = [1.0, 0.3, 0.09];
    let mut values = Vec::new();
    for sense in [Sense::Max, Sense::Min] {
        let r = run_bound(&sys, &c, sense)?;
        match &r.cone {
            ConePosition::SingularlyPositive { index, .. } => {
                ensure(index.index() == 2, || format!("evidence index {}", index.index()))?;
            }
            other => return Err(format!("classified {}", other.name())),
        }
        ensure((r.value - 0.027).abs() <= 1e-6, || format!("{sense:?} value {}", r.value))?;
        values.push(r.value);
    }
    ensure((values[0] - values[1]).abs() <= 1e-6, || format!("max {} min {}", values[0], values[1]))?;
    Ok(format!("singular, index 2, max {} min {}", values[0], values[1]))
}

fn levels_verdict(sys: &FunctionSystem, n: usize) -> Result<bool, String> {
    for k in 0..=n {
        let sample = SimplexSample::default_for(sys.a(), sys.b(), k, verify::DEFAULT_SEED);
        let v = verify::check_tplus(sys, k, &sample).map_err(|e| e.to_string())?;
        if v.status != Status::VerifiedPlus {
            return Ok(false);
        }
    }
    Ok(true)
}

fn random_system(rng: &mut ChaCha8Rng) -> (FunctionSystem, usize) {
    let n = rng.gen_range(1..=4);
    let srcs: Vec<String> = if rng.gen_bool(0.5) {
        (0..=n)
            .map(|k| {
                let lead: f64 = if rng.gen_bool(0.8) { 1.0 } else { -1.0 };
                let mut terms = vec![format!("{:?} * x^{k}", lead * rng.gen_range(0.5..2.0))];
                for j in 0..k {
                    terms.push(format!("{:?} * x^{j}", rng.gen_range(-1.0..1.0)));
                }
                terms.join(" + ")
            })
            .collect()
    } else {
        let mut rates: Vec<f64> = (0..=n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        if rng.gen_bool(0.7) {
            rates.sort_by(f64::total_cmp);
        }
        rates.iter().map(|r| format!("exp({r:?} * x)")).collect()
    };
    let refs: Vec<&str> = srcs.iter().map(String::as_str).collect();
    let (a, b) = if rng.gen_bool(0.5) { (0.0, 1.0) } else { (-1.0, 1.0) };
    (system(a, b, &refs), n)
}

fn criterion_8() -> Check {
    let sys = monomials(6);
    let grid = interior_grid(0.0, 1.0, verify::DEFAULT_WRONSKIAN_POINTS);
    let v = check_mplus_wronskian(&sys, 6, &grid).map_err(|e| e.to_string())?;
    ensure(v.status == Status::VerifiedPlus, || format!("monomials: {:?}", v.status))?;
    for k in 0..=6 {
        let w0 = wronskian(&sys, k, 0.0).map_err(|e| e.to_string())?;
        let expected: f64 = (0..=k).map(|j| (1..=j).product::<usize>() as f64).product();
        ensure((w0 - expected).abs() <= 1e-9 * expected, || format!("W_0^{k}(0) = {w0}"))?;
        for x in [0.25, 0.5, 1.0] {
            let w = wronskian(&sys, k, x).map_err(|e| e.to_string())?;
            ensure((w - w0).abs() <= 1e-9 * w0, || format!("W_0^{k} not constant: {w} at {x}"))?;
        }
    }

    let cubic = system(-1.0, 1.0, &["1", "x", "x^3"]);
    let v = check_mplus_wronskian(&cubic, 2, &interior_grid(-1.0, 1.0, verify::DEFAULT_WRONSKIAN_POINTS))
        .map_err(|e| e.to_string())?;
    ensure(v.status == Status::Refuted && v.level == 2, || format!("(1,x,x^3): {:?} level {}", v.status, v.level))?;
    let x = v.witness.as_ref().map(|w| w[0]).unwrap_or(f64::NAN);
    let value = v.value.unwrap_or(f64::NAN);
    ensure(x > -1.0 && x < 0.0 && (value - 6.0 * x).abs() <= 1e-9, || format!("witness {x}, W = {value}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut agree, mut inconclusive) = (0, 0);
    for trial in 0..40 {
        let (sys, n) = random_system(&mut rng);
        let grid = interior_grid(sys.a(), sys.b(), verify::DEFAULT_WRONSKIAN_POINTS);
        let w = check_mplus_wronskian(&sys, n, &grid).map_err(|e| e.to_string())?;
        let sampled_plus = levels_verdict(&sys, n)?;
        let contradiction = match w.status {
            Status::VerifiedPlus => !sampled_plus,
            Status::Refuted => sampled_plus,
            _ => false,
        };
        if w.status == Status::Inconclusive {
            inconclusive += 1;
        }
        ensure(!contradiction, || format!("trial {trial}: wronskian {:?}, sampling M+ {sampled_plus}", w.status))?;
        agree += 1;
    }
    Ok(format!(
        "monomials to x^6 M+, (1,x,x^3) refuted at x = {x}, {agree} random systems consistent ({inconclusive} inconclusive)"
    ))
}

fn main() -> ExitCode {
    let mut atoms = Vec::new();
    let results: Vec<(&str, Check)> = vec![
        ("1 single-moment bounds", criterion_1()),
        ("2 two-moment bounds", criterion_2()),
        ("3 oracle-solver agreement", criterion_3(&mut atoms)),
        ("4 objective independence", criterion_4()),
        ("5 support structure", criterion_5(&mut atoms)),
        ("6 caratheodory bound", criterion_6(&atoms)),
        ("7 singular dichotomy", criterion_7()),
        ("8 wronskian criterion", criterion_8()),
    ];
    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(msg) => println!("PASS criterion {name}: {msg}"),
            Err(msg) => {
                failed += 1;
                println!("FAIL criterion {name}: {msg}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
