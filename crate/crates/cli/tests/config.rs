use orlicz::phi::FamilyDescriptor;
use orlicz::solver::Method;
use orlicz::Variant;
use orlicz_cli::{parse_config, Command, GridSpec, Options, RunConfig};
use proptest::prelude::*;

fn exponent() -> impl Strategy<Value = String> {
    prop_oneof![
        (1.1..4.0f64).prop_map(|v| v.to_string()),
        (1.1..2.0f64, 0.0..1.0f64).prop_map(|(a, b)| format!("{a} + {b}*x^2")),
        Just("1.5 + 0.25*sin(3*x)".to_string()),
    ]
}

fn weight() -> impl Strategy<Value = String> {
    prop_oneof![Just("x^2".to_string()), Just("abs(x)".to_string()), (0.0..2.0f64).prop_map(|v| v.to_string())]
}

fn leaf() -> impl Strategy<Value = FamilyDescriptor> {
    prop_oneof![
        (1.1..4.0f64, any::<bool>()).prop_map(|(p, normalized)| FamilyDescriptor::Power { p: p.to_string(), normalized }),
        (exponent(), any::<bool>()).prop_map(|(p, normalized)| FamilyDescriptor::VarExponent { p, normalized }),
        (exponent(), any::<bool>()).prop_map(|(p, normalized)| FamilyDescriptor::LogPower { p, normalized }),
        (exponent(), weight(), any::<bool>()).prop_map(|(p, mu, normalized)| FamilyDescriptor::DoublePhase {
            p,
            q: "4.5".into(),
            mu,
            normalized
        }),
        (exponent(), weight(), any::<bool>()).prop_map(|(p, mu, normalized)| FamilyDescriptor::LogDoublePhase {
            p,
            q: "4.5".into(),
            mu,
            normalized
        }),
    ]
}

fn descriptor() -> impl Strategy<Value = FamilyDescriptor> {
    leaf().prop_recursive(2, 8, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(|children| FamilyDescriptor::Sum { children }),
            (0.1..10.0f64, inner).prop_map(|(scale, child)| FamilyDescriptor::Scaled { scale, child: Box::new(child) }),
        ]
    })
}

fn grid() -> impl Strategy<Value = GridSpec> {
    prop_oneof![
        (-5.0..0.0f64, 0.5..5.0f64, 3..300usize).prop_map(|(a, b, n)| GridSpec { dim: 1, extent: vec![a, b], n }),
        (0.0..1.0f64, 3..60usize).prop_map(|(a, n)| GridSpec { dim: 2, extent: vec![a, a + 1.0, -1.0, 2.0], n }),
    ]
}

fn options() -> impl Strategy<Value = Options> {
    (
        prop::option::of(1e-14..1e-4f64),
        any::<bool>(),
        any::<bool>(),
        prop::collection::vec(1.01..8.0f64, 1..5),
        1..100_000usize,
        prop::collection::vec(3..500usize, 1..5),
    )
        .prop_map(|(tol, newton, b, r, pairs, ns)| Options {
            tol,
            method: if newton { Method::Newton } else { Method::Descent },
            variant: if b { Variant::B } else { Variant::A },
            load: "sin(x) + 1".into(),
            r,
            pairs,
            ns,
            ..Options::default()
        })
}

fn command() -> impl Strategy<Value = Option<Command>> {
    prop::option::of(prop::sample::select(vec![
        Command::Check,
        Command::Constants,
        Command::Conjugate,
        Command::Solve,
        Command::Refine,
    ]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn serialize_then_parse_is_identity(
        command in command(),
        seed in 0..=i64::MAX as u64,
        phi in descriptor(),
        grid in grid(),
        options in options(),
    ) {
        let config = RunConfig { command, seed, phi, grid, options };
        config.validate().unwrap();
        let text = config.to_toml();
        prop_assert_eq!(parse_config(&text).unwrap(), config, "{}", text);
    }
}

#[test]
fn documented_example() {
    let c = parse_config("phi = {family=\"var_exponent\", p=\"1.2 + 0.3*x^2\"}\n").unwrap();
    let p = orlicz::ScalarField::parse("1.2 + 0.3*x^2", &c.grid.domain().unwrap()).unwrap();
    let (lo, hi) = p.bounds();
    assert!((lo - 1.2).abs() < 1e-12 && (hi - 1.5).abs() < 1e-12);
}

#[test]
fn nested_tables() {
    let text = r#"
command = "refine"
seed = 5

[phi]
family = "sum"

[[phi.children]]
family = "power"
p = "2"

[[phi.children]]
family = "scaled"
scale = 0.5
child = { family = "double_phase", p = "1.1", q = "1.2", mu = "1 + x" }

[grid]
dim = 2
extent = [0.0, 1.0, 0.0, 1.0]
n = 11
"#;
    let c = parse_config(text).unwrap();
    assert_eq!(c.command, Some(Command::Refine));
    assert!(matches!(&c.phi, FamilyDescriptor::Sum { children } if children.len() == 2));
    assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
}
