use proptest::prelude::*;

use tsys::funcsys::{add, call, div, mul, neg, num, parse, pow, sub, var, Expr, Func, FunctionSystem};
use tsys::verify::{
    check_mplus_wronskian, check_tplus, interior_grid, normalize_signs, system_determinant, wronskian, SimplexSample,
    Status,
};

fn expr_strategy() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(-3.0..3.0f64).prop_map(num), Just(var())];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| add(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| sub(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| mul(l, r)),
            // denominators kept away from zero
            (inner.clone(), inner.clone()).prop_map(|(l, r)| div(l, add(num(2.0), call(Func::Sin, r)))),
            inner.clone().prop_map(neg),
            (inner.clone(), -2..4i32).prop_map(|(e, k)| pow(add(num(1.5), call(Func::Cos, e)), k)),
            inner.clone().prop_map(|e| call(Func::Exp, call(Func::Sin, e))),
            inner.clone().prop_map(|e| call(Func::Log, add(num(1.0), pow(e, 2)))),
            inner.clone().prop_map(|e| call(Func::Sqrt, add(num(0.5), pow(e, 2)))),
            inner.prop_map(|e| call(Func::Cos, e)),
        ]
    })
}

fn system(a: f64, b: f64, srcs: &[&str]) -> FunctionSystem {
    FunctionSystem::new(a, b, srcs.iter().map(|s| parse(s).unwrap()).collect()).unwrap()
}

fn monomials(a: f64, b: f64, deg: usize) -> FunctionSystem {
    let srcs: Vec<String> = (0..=deg).map(|k| format!("x^{k}")).collect();
    let refs: Vec<&str> = srcs.iter().map(String::as_str).collect();
    system(a, b, &refs)
}

fn increasing_tuple(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, k + 1).prop_filter_map("distinct nodes", |mut v| {
        v.sort_by(f64::total_cmp);
        v.windows(2).all(|w| w[1] - w[0] > 1e-3).then_some(v)
    })
}

proptest! {
    #[test]
    fn derivative_matches_finite_difference(e in expr_strategy(), x in 0.1..0.9f64) {
        let h = 1e-5;
        let (Ok(d), Ok(up), Ok(down)) = (e.derivative().eval(x), e.eval(x + h), e.eval(x - h)) else {
            return Err(TestCaseError::reject("outside domain"));
        };
        prop_assume!(d.abs() < 1e4 && up.abs() < 1e4);
        let fd = (up - down) / (2.0 * h);
        prop_assert!((d - fd).abs() <= 1e-6 * (1.0 + d.abs()) + 1e-6, "{e}: {d} vs {fd}");
    }

    #[test]
    fn print_then_parse_is_identity(e in expr_strategy()) {
        let printed = e.to_string();
        let back = parse(&printed).unwrap();
        prop_assert_eq!(&back, &e);
        prop_assert_eq!(back.to_string(), printed);
    }

    #[test]
    fn rescale_round_trip(alpha in -2.0..2.0f64, x in 0.0..1.0f64) {
        let sys = system(0.0, 1.0, &["1", "x", "sin(x)", "exp(x)"]);
        let h = parse(&format!("exp({alpha:?} * x) + x^2")).unwrap();
        let back = sys.rescale(&h).unwrap().rescale(&div(num(1.0), h)).unwrap();
        for i in 0..sys.len() {
            let (p, q) = (sys.eval(i, x).unwrap(), back.eval(i, x).unwrap());
            prop_assert!((p - q).abs() <= 1e-12 * (1.0 + p.abs()));
        }
    }

    #[test]
    fn swapping_functions_negates_determinant(t in increasing_tuple(2), i in 0..3usize, j in 0..3usize) {
        prop_assume!(i != j);
        let srcs = ["1", "exp(x)", "x^2 + sin(x)"];
        let mut swapped = srcs;
        swapped.swap(i, j);
        let d = system_determinant(&system(0.0, 1.0, &srcs), 2, &t).unwrap();
        let e = system_determinant(&system(0.0, 1.0, &swapped), 2, &t).unwrap();
        prop_assert!((d + e).abs() <= 1e-13 * (1.0 + d.abs()));
    }

    #[test]
    fn monomial_determinant_is_vandermonde(k in 1..6usize, seed in any::<u64>()) {
        let sample = SimplexSample::random(0.0, 1.0, k, 1, seed);
        let t = &sample.tuples[0];
        let d = system_determinant(&monomials(0.0, 1.0, k), k, t).unwrap();
        let mut v = 1.0;
        for q in 0..t.len() {
            for p in 0..q {
                v *= t[q] - t[p];
            }
        }
        prop_assert!((d - v).abs() <= 1e-10 * v.abs().max(1e-300) + 1e-15, "{d} vs {v}");
    }

    #[test]
    fn wronskian_is_confluent_determinant(k in 1..4usize, x in 0.1..0.8f64) {
        let sys = system(0.0, 1.0, &["exp(0.3 * x)", "exp(x)", "exp(1.7 * x)", "exp(2.2 * x)"]);
        let h = 1e-3;
        let nodes: Vec<f64> = (0..=k).map(|j| x + j as f64 * h).collect();
        let det = system_determinant(&sys, k, &nodes).unwrap();
        // det(g_i(x + j h)) ~ W(x) * prod_{p<q} (q - p) h / prod_j j!
        let mut scale = 1.0;
        for q in 0..=k {
            for p in 0..q {
                scale *= (q - p) as f64 * h;
            }
            scale /= (1..=q).product::<usize>() as f64;
        }
        let w = wronskian(&sys, k, x).unwrap();
        prop_assert!(((det / scale) - w).abs() <= 1e-2 * w.abs(), "{} vs {w}", det / scale);
    }

    #[test]
    fn normalize_signs_is_idempotent(signs in prop::collection::vec(prop::bool::ANY, 4)) {
        let signs: Vec<i8> = signs.into_iter().map(|s| if s { 1 } else { -1 }).collect();
        let sys = monomials(0.0, 1.0, 3).with_signs(&signs);
        let found = normalize_signs(&sys, 3, 11).unwrap();
        prop_assert_eq!(found.as_slice(), signs.as_slice());
        let fixed = sys.with_signs(found.as_slice());
        prop_assert!(normalize_signs(&fixed, 3, 11).unwrap().all_positive());
    }
}

#[test]
fn sign_is_constant_on_ten_thousand_tuples() {
    for (sys, k) in [
        (monomials(0.0, 1.0, 4), 4),
        (system(-1.0, 2.0, &["exp(-x)", "1", "exp(x)", "exp(2 * x)"]), 3),
        (system(0.0, 1.0, &["1", "cos(x)", "sin(x)"]), 2),
    ] {
        let sample = SimplexSample::random(sys.a(), sys.b(), k, 10_000, 99);
        let v = check_tplus(&sys, k, &sample).unwrap();
        assert_eq!(v.status, Status::VerifiedPlus, "{v:?}");
        assert_eq!(v.sample_size, 10_000);
    }
}

#[test]
fn wronskian_and_sampling_agree_on_known_systems() {
    let cases = [
        (system(0.0, 1.0, &["1", "x", "x^2", "x^3"]), 3, Status::VerifiedPlus),
        (system(-1.0, 1.0, &["1", "x", "x^3"]), 2, Status::Refuted),
        (system(0.0, 2.0, &["exp(x)", "x * exp(x)", "x^2 * exp(x)"]), 2, Status::VerifiedPlus),
    ];
    for (sys, n, expected) in cases {
        let w = check_mplus_wronskian(&sys, n, &interior_grid(sys.a(), sys.b(), 2001)).unwrap();
        assert_eq!(w.status, expected);
        let sampled_plus = (0..=n).all(|k| {
            check_tplus(&sys, k, &SimplexSample::default_for(sys.a(), sys.b(), k, 3)).unwrap().status
                == Status::VerifiedPlus
        });
        assert_eq!(sampled_plus, expected == Status::VerifiedPlus);
    }
}

#[test]
fn affine_quadratic_is_t_minus_not_refuted() {
    // det(1, x, x(1-x)) = -(Vandermonde), so the system is T- and flips sign
    let sys = system(0.0, 1.0, &["1", "x", "x * (1 - x)"]);
    let v = check_tplus(&sys, 2, &SimplexSample::default_for(0.0, 1.0, 2, 5)).unwrap();
    assert_eq!(v.status, Status::VerifiedMinus);
    assert_eq!(normalize_signs(&sys, 2, 5).unwrap().as_slice(), &[1, 1, -1]);
}
