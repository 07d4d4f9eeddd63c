use std::path::PathBuf;
use std::process::Command;

use serde_json::Value;
use tsys_cli::{load_spec, run, Outcome, SpecError};

fn problem(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.push("problems");
    p.push(format!("{name}.json"));
    p.display().to_string()
}

fn tsys(args: &[&str]) -> Outcome {
    run(std::iter::once("tsys").chain(args.iter().copied()))
}

fn json(out: &Outcome) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", out.stdout))
}

#[test]
fn load_two_moment_problem() {
    let spec = load_spec(&PathBuf::from(problem("two_moments"))).unwrap();
    assert_eq!(spec.constraints(), 2);
    assert_eq!(spec.objective.to_string(), "(x)^2");
}

#[test]
fn spec_errors() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, "").unwrap();
    assert!(matches!(load_spec(&empty), Err(SpecError::Syntax { .. })));
    let out = tsys(&["verify", "--spec", empty.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("line 1"), "{}", out.stderr);

    let arity = dir.path().join("arity.json");
    std::fs::write(&arity, r#"{"interval":[0,1],"functions":["1","x","x^2"],"objective":"x^3","moments":[1,0.5]}"#)
        .unwrap();
    assert!(matches!(load_spec(&arity), Err(SpecError::Arity { functions: 3, moments: 2 })));
    assert_eq!(tsys(&["bound", "--sense", "max", "--spec", arity.to_str().unwrap()]).code, 1);

    let missing = dir.path().join("missing.json");
    let out = tsys(&["verify", "--spec", missing.to_str().unwrap()]);
    assert_eq!(out.code, 1);
    assert!(out.stderr.contains("cannot read"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(tsys(&["bound", "--spec", &problem("two_moments")]).code, 1);
    assert_eq!(tsys(&["bound", "--sense", "sideways", "--spec", &problem("two_moments")]).code, 1);
    assert_eq!(tsys(&["verify"]).code, 1);
    let help = tsys(&["--help"]);
    assert_eq!(help.code, 0);
    assert!(help.stdout.contains("compare"));
}

#[test]
fn verify_monomials_passes() {
    let out = tsys(&["verify", "--spec", &problem("uniform")]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert!(out.stdout.ends_with("result: m+\n"));
    assert_eq!(out.stdout.lines().filter(|l| l.contains("verified+")).count(), 6);
}

#[test]
fn verify_sign_flip_is_refuted_with_signs() {
    let out = tsys(&["verify", "--spec", &problem("affine_quadratic")]);
    assert_eq!(out.code, 2);
    assert!(out.stdout.contains("level 2: verified-"));
    assert!(out.stdout.contains("normalizing signs: + + -"));
}

#[test]
fn verify_cubic_has_a_wronskian_witness() {
    let out = tsys(&["verify", "--json", "--spec", &problem("cubic")]);
    assert_eq!(out.code, 2);
    let v = json(&out);
    assert_eq!(v["result"], "refuted");
    let w = &v["wronskian"];
    assert_eq!(w["status"], "refuted");
    assert_eq!(w["level"], 2);
    let x = w["witness"][0].as_f64().unwrap();
    let value = w["value"].as_f64().unwrap();
    assert!(x > -1.0 && x < 0.0);
    assert!((value - 6.0 * x).abs() < 1e-9);
}

#[test]
fn verify_vanishing_wronskian_is_inconclusive() {
    let out = tsys(&["verify", "--spec", &problem("flat_wronskian")]);
    assert_eq!(out.code, 3, "{}", out.stdout);
    assert!(out.stdout.contains("W_0^1 = 0 at x = 0"));
}

#[test]
fn bound_single_moment() {
    let out = tsys(&["bound", "--sense", "max", "--spec", &problem("single_moment")]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("value: 1\n"));
    assert!(out.stdout.contains("  x = 1  w = 1\n"));
    let out = tsys(&["bound", "--sense", "min", "--spec", &problem("single_moment")]);
    assert!(out.stdout.contains("value: 0\n"));
    assert!(out.stdout.contains("  x = 0  w = 1\n"));
}

#[test]
fn bound_two_moments() {
    let out = tsys(&["bound", "--sense", "min", "--spec", &problem("two_moments")]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.contains("value: 0.25\n"));
    assert!(out.stdout.contains("atoms: 1\n  x = 0.5  w = 1\n"));
    let v = json(&tsys(&["bound", "--sense", "max", "--json", "--spec", &problem("two_moments")]));
    assert_eq!(v["value"], 0.5);
    assert_eq!(v["cone"]["classification"], "strictly-positive");
    assert_eq!(v["measure"]["atoms"].as_array().unwrap().len(), 2);
    let zero = json(&tsys(&["bound", "--sense", "min", "--json", "--spec", &problem("zero_moments")]));
    assert_eq!(zero["measure"]["atoms"].as_array().unwrap().len(), 0);
}

#[test]
fn bound_exit_codes() {
    let out = tsys(&["bound", "--sense", "max", "--spec", &problem("infeasible")]);
    assert_eq!(out.code, 4);
    assert!(out.stderr.contains("outside the moment cone"));
    assert_eq!(tsys(&["bound", "--sense", "max", "--spec", &problem("affine_quadratic")]).code, 2);
    assert_eq!(tsys(&["bound", "--sense", "max", "--override", "--spec", &problem("affine_quadratic")]).code, 0);
    let out = tsys(&["bound", "--sense", "min", "--tol", "0", "--spec", &problem("uniform")]);
    assert_eq!(out.code, 5, "{}", out.stderr);
}

#[test]
fn bound_singular() {
    for sense in ["max", "min"] {
        let v = json(&tsys(&["bound", "--sense", sense, "--json", "--spec", &problem("singular")]));
        assert_eq!(v["cone"]["classification"], "singularly-positive");
        assert!((v["value"].as_f64().unwrap() - 0.027).abs() < 1e-9);
    }
}

#[test]
fn rescaled_problem_reports_original_weights() {
    let v = json(&tsys(&["bound", "--sense", "min", "--json", "--spec", &problem("exponential")]));
    let atoms = v["measure"]["atoms"].as_array().unwrap();
    let (mut m0, mut m1) = (0.0, 0.0);
    for at in atoms {
        let (x, w) = (at["node"].as_f64().unwrap(), at["weight"].as_f64().unwrap());
        m0 += w;
        m1 += w * x.exp();
    }
    assert!((m0 - 1.0).abs() < 1e-9 && (m1 - 3.0).abs() < 1e-9, "{m0} {m1}");
}

#[test]
fn oracle_ladder_rows() {
    let out = tsys(&["oracle", "--grids", "1025,4097", "--spec", &problem("two_moments")]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, "sense: max\ngrid value atoms residual\n1025 0.5 2 0\n4097 0.5 2 0\n");
    let v = json(&tsys(&["oracle", "--json", "--spec", &problem("uniform")]));
    let rungs = v["rungs"].as_array().unwrap();
    assert_eq!(rungs.len(), 3);
    let values: Vec<f64> = rungs.iter().map(|r| r["value"].as_f64().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-15));
    assert!(rungs.iter().all(|r| r["measure"]["atoms"].as_array().unwrap().len() <= 4));
}

#[test]
fn compare_objectives() {
    let out = tsys(&["compare", "--alt", "exp(x)", "--spec", &problem("uniform")]);
    assert_eq!(out.code, 0, "{}{}", out.stdout, out.stderr);
    assert!(out.stdout.contains("result: same extremal measures"));
    let v = json(&tsys(&["compare", "--alt", "x^4", "--json", "--sense", "max", "--spec", &problem("uniform")]));
    assert_eq!(v["comparisons"][0]["distance"], 0.0);
    let out = tsys(&["compare", "--alt=-x^4", "--sense", "max", "--spec", &problem("uniform")]);
    assert_eq!(out.code, 2);
    let out = tsys(&["compare", "--alt", "x +", "--spec", &problem("uniform")]);
    assert_eq!(out.code, 1);
}

#[test]
fn binary_is_deterministic_and_reads_seed_from_env() {
    let bin = env!("CARGO_BIN_EXE_tsys");
    let spec = problem("two_moments");
    let go = |seed: Option<&str>| {
        let mut cmd = Command::new(bin);
        cmd.args(["verify", "--spec", &spec]).env_remove("TSYS_SEED");
        if let Some(s) = seed {
            cmd.env("TSYS_SEED", s);
        }
        cmd.output().unwrap()
    };
    let first = go(Some("42"));
    let second = go(Some("42"));
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
    assert!(String::from_utf8_lossy(&first.stdout).contains("seed 42"));
    assert!(!String::from_utf8_lossy(&go(None).stdout).contains("seed 42"));
    let out = Command::new(bin).args(["bound", "--sense", "max", "--spec", &problem("infeasible")]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}
