mod common;

use std::sync::Arc;

use orlicz::expr::Expr;
use orlicz::grid::{Grid, GridFunction};
use orlicz::modular::{hoelder_check, luxemburg_norm, modular, random_grid_function};
use orlicz::mono::{pairing, powerlaw_constant, powerlaw_ratio, rotate_pair, VectorPair};
use orlicz::phi::power_conjugate;
use orlicz::props::{
    default_t_grid, estimate_adec_exponent, estimate_ainc_exponent, log_grid, mono1_constants, young_check,
};
use orlicz::{DiscreteOperator, PhiFunction, SeededRng, Variant, Verdict};
use proptest::prelude::*;

use common::families;

fn family() -> impl Strategy<Value = (&'static str, PhiFunction)> {
    (0..families().len()).prop_map(|k| families().swap_remove(k))
}

fn vec2() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 2)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn line() -> Arc<Grid> {
    Arc::new(Grid::interval(0.0, 1.0, 17).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn d1_matches_central_difference((_, phi) in family(), x in 0.0..1.0f64, e in -3.0..3.0f64) {
        let t = 10f64.powf(e);
        let h = 1e-6 * t;
        let fd = (phi.value_at([x, 0.0], t + h) - phi.value_at([x, 0.0], t - h)) / (2.0 * h);
        let d1 = phi.d1_at([x, 0.0], t);
        prop_assert!((d1 - fd).abs() <= 1e-5 * (1.0 + d1), "d1 {d1} fd {fd}");
    }

    #[test]
    fn eval_is_increasing_in_t((_, phi) in family(), x in 0.0..1.0f64) {
        let values: Vec<f64> = log_grid(1e-6, 1e6, 600).into_iter().map(|t| phi.value_at([x, 0.0], t)).collect();
        prop_assert_eq!(phi.value_at([x, 0.0], 0.0), 0.0);
        prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn fenchel_young((_, phi) in family(), x in 0.0..1.0f64, es in -2.0..2.0f64, et in -2.0..2.0f64) {
        let (s, t) = (10f64.powf(es), 10f64.powf(et));
        let conj = phi.conjugate_eval([x, 0.0], s).unwrap();
        let rhs = phi.value_at([x, 0.0], t) + conj;
        prop_assert!(s * t <= rhs * (1.0 + 1e-10), "{} > {rhs}", s * t);
    }

    #[test]
    fn power_conjugate_closed_form(p in 1.1..6.0f64, e in -2.0..2.0f64) {
        let s = 10f64.powf(e);
        let phi = PhiFunction::power(p).unwrap();
        prop_assert!(rel(phi.conjugate_numeric([0.0, 0.0], s).unwrap(), power_conjugate(p, s)) <= 1e-8);
    }

    #[test]
    fn pairing_is_nonnegative_and_symmetric((_, phi) in family(), xi in vec2(), eta in vec2(), x in 0.0..1.0f64) {
        let pair = VectorPair::new(xi, eta);
        let a = pairing(&phi, [x, 0.0], &pair);
        let b = pairing(&phi, [x, 0.0], &pair.swapped());
        prop_assert!(a >= -1e-12 * (1.0 + a.abs()));
        prop_assert!(rel(a, b) <= 1e-12 || (a - b).abs() <= 1e-12);
    }

    #[test]
    fn pairing_is_rotation_invariant(xi in vec2(), eta in vec2(), angle in 0.0..6.3f64) {
        let phi = PhiFunction::sum(vec![PhiFunction::power(1.5).unwrap(), PhiFunction::power(3.0).unwrap()]).unwrap();
        let pair = VectorPair::new(xi, eta);
        let a = pairing(&phi, [0.0, 0.0], &pair);
        let b = pairing(&phi, [0.0, 0.0], &rotate_pair(&pair, angle));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
    }

    #[test]
    fn power_pairing_is_homogeneous(r in 1.1..6.0f64, xi in vec2(), eta in vec2(), lambda in 0.01..100.0f64) {
        let phi = PhiFunction::power(r).unwrap();
        let pair = VectorPair::new(xi.clone(), eta.clone());
        let scale = |v: &Vec<f64>| v.iter().map(|c| c * lambda).collect::<Vec<_>>();
        let a = pairing(&phi, [0.0, 0.0], &pair);
        let b = pairing(&phi, [0.0, 0.0], &VectorPair::new(scale(&xi), scale(&eta)));
        prop_assert!(rel(b, lambda.powf(r) * a) <= 1e-10);
    }

    #[test]
    fn powerlaw_ratio_respects_constant(r in 1.1..6.0f64, xi in vec2(), eta in vec2()) {
        prop_assume!(xi != eta);
        prop_assert!(powerlaw_ratio(r, &xi, &eta) >= powerlaw_constant(r) * (1.0 - 1e-12));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn norm_is_homogeneous((_, phi) in family(), seed in any::<u64>(), lambda in -100.0..100.0f64) {
        prop_assume!(lambda.abs() > 1e-2);
        let u = random_grid_function(&line(), &mut SeededRng::new(seed), false);
        let n = luxemburg_norm(&phi, &u).unwrap();
        let nl = luxemburg_norm(&phi, &u.scaled(lambda)).unwrap();
        prop_assert!(rel(nl, lambda.abs() * n) <= 1e-10);
    }

    #[test]
    fn unit_ball((_, phi) in family(), seed in any::<u64>()) {
        let u = random_grid_function(&line(), &mut SeededRng::new(seed), false);
        let (n, m) = (luxemburg_norm(&phi, &u).unwrap(), modular(&phi, &u));
        prop_assert_eq!(n <= 1.0, m <= 1.0 + 1e-9, "norm {} modular {}", n, m);
    }

    #[test]
    fn triangle_inequality((_, phi) in family(), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let u = random_grid_function(&line(), &mut rng, false);
        let v = random_grid_function(&line(), &mut rng, false);
        let sum: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| a + b).collect();
        let w = GridFunction::new(line(), sum).unwrap();
        let lhs = luxemburg_norm(&phi, &w).unwrap();
        let rhs = luxemburg_norm(&phi, &u).unwrap() + luxemburg_norm(&phi, &v).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-10));
    }

    #[test]
    fn power_norm_identity(p in 1.1..5.0f64, seed in any::<u64>()) {
        let phi = PhiFunction::power(p).unwrap();
        let u = random_grid_function(&line(), &mut SeededRng::new(seed), false);
        prop_assert!(rel(luxemburg_norm(&phi, &u).unwrap().powf(p), modular(&phi, &u)) <= 1e-10);
    }

    #[test]
    fn hoelder_never_fails((_, phi) in family(), seed in any::<u64>()) {
        let mut rng = SeededRng::new(seed);
        let u = random_grid_function(&line(), &mut rng, false);
        let v = random_grid_function(&line(), &mut rng, false);
        prop_assert!(hoelder_check(&phi, &u, &v).unwrap().is_holds());
    }

    #[test]
    fn discrete_operator_is_monotone((_, phi) in family(), seed in any::<u64>(), b in any::<bool>()) {
        let variant = if b { Variant::B } else { Variant::A };
        let op = DiscreteOperator::new(phi, line(), variant);
        let mut rng = SeededRng::new(seed);
        let u = random_grid_function(&line(), &mut rng, variant == Variant::A).into_values();
        let v = random_grid_function(&line(), &mut rng, variant == Variant::A).into_values();
        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let au = op.pairing_discrete(&u, &w);
        let av = op.pairing_discrete(&v, &w);
        prop_assert!(au - av >= -1e-12 * (au.abs() + av.abs()).max(1.0));
    }

    #[test]
    fn young_holds_on_random_tuples((_, phi) in family(), x in 0.0..1.0f64, es in -3.0..3.0f64, et in -3.0..3.0f64) {
        let tuples = [([x, 0.0], 10f64.powf(es), 10f64.powf(et))];
        prop_assert!(young_check(&phi, &tuples).is_holds());
    }
}

#[test]
fn property_constants_are_consistent() {
    let ts = default_t_grid();
    for (name, phi) in families() {
        let xs = orlicz::props::default_x_samples(phi.domain());
        let mono = mono1_constants(&phi, &xs, &ts);
        if mono.is_holds() {
            assert!(mono.constant("C1").unwrap() <= mono.constant("C2").unwrap(), "{name}");
        }
        let (inc, dec) = (estimate_ainc_exponent(&phi, &xs, &ts), estimate_adec_exponent(&phi, &xs, &ts));
        assert!(inc.constant("exponent").unwrap() <= dec.constant("exponent").unwrap(), "{name}");
        assert_eq!(inc, estimate_ainc_exponent(&phi, &xs, &ts), "{name}: rerun differs");
    }
}

#[test]
fn failing_witnesses_are_sound() {
    let phi = PhiFunction::power(2.0).unwrap();
    let psi = PhiFunction::power(3.0).unwrap();
    let report = orlicz::props::embedding_witness_check(&phi, &psi, 1.0, 1.0, &[[0.0, 0.0]], &log_grid(1e-3, 1e3, 200));
    assert_eq!(report.verdict, Verdict::Fails);
    assert!(!report.witnesses.is_empty());
    for w in &report.witnesses {
        assert!(w.lhs > w.rhs);
        assert!(psi.value_at(w.x, w.t) > phi.value_at(w.x, w.t) + 1.0);
    }
}

#[derive(Debug, Clone)]
enum Tree {
    Num(f64),
    X,
    Y,
    Neg(Box<Tree>),
    Bin(char, Box<Tree>, Box<Tree>),
    Call(&'static str, Box<Tree>),
}

impl Tree {
    fn render(&self) -> String {
        match self {
            Tree::Num(v) => format!("{v}"),
            Tree::X => "x".into(),
            Tree::Y => "y".into(),
            Tree::Neg(a) => format!("-({})", a.render()),
            Tree::Bin(op, a, b) => format!("({}) {op} ({})", a.render(), b.render()),
            Tree::Call(f, a) => format!("{f}({})", a.render()),
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Tree::Num(v) => *v,
            Tree::X => x,
            Tree::Y => y,
            Tree::Neg(a) => -a.eval(x, y),
            Tree::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y), b.eval(x, y));
                match op {
                    '+' => a + b,
                    '-' => a - b,
                    '*' => a * b,
                    '/' => a / b,
                    _ => a.powf(b),
                }
            }
            Tree::Call(f, a) => {
                let a = a.eval(x, y);
                match *f {
                    "sin" => a.sin(),
                    "cos" => a.cos(),
                    "exp" => a.exp(),
                    "log" => a.ln(),
                    _ => a.abs(),
                }
            }
        }
    }
}

fn tree() -> impl Strategy<Value = Tree> {
    let leaf = prop_oneof![(0.0..10.0f64).prop_map(Tree::Num), Just(Tree::X), Just(Tree::Y)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Tree::Neg(Box::new(a))),
            (prop::sample::select(vec!['+', '-', '*', '/', '^']), inner.clone(), inner.clone())
                .prop_map(|(op, a, b)| Tree::Bin(op, Box::new(a), Box::new(b))),
            (prop::sample::select(vec!["sin", "cos", "exp", "log", "abs"]), inner)
                .prop_map(|(f, a)| Tree::Call(f, Box::new(a))),
        ]
    })
}

proptest! {
    #[test]
    fn parser_agrees_with_direct_evaluation(t in tree(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let expr = Expr::parse(&t.render()).unwrap();
        let (got, want) = (expr.eval(x, y), t.eval(x, y));
        prop_assert!(got.to_bits() == want.to_bits() || (got.is_nan() && want.is_nan()), "{} -> {got} vs {want}", t.render());
    }
}

#[test]
fn parser_precedence() {
    let cases = [("2^3^2", 512.0), ("-2^2", -4.0), ("1 + 2 * 3", 7.0), ("8 / 4 / 2", 1.0), ("min(1, max(x, 3))", 1.0)];
    for (src, want) in cases {
        assert_eq!(Expr::parse(src).unwrap().eval(0.0, 0.0), want, "{src}");
    }
}
