#![allow(dead_code)]

use orlicz::{Domain, PhiFunction, ScalarField};

pub fn unit() -> Domain {
    Domain::unit_interval()
}

pub fn field(src: &str) -> ScalarField {
    ScalarField::parse(src, &unit()).unwrap()
}

/// One representative per built-in family, plus variable-coefficient cases.
pub fn families() -> Vec<(&'static str, PhiFunction)> {
    let d = unit();
    vec![
        ("power p=2", PhiFunction::power(2.0).unwrap().with_domain(d)),
        ("power p=1.5", PhiFunction::power(1.5).unwrap().with_domain(d)),
        ("power p=3", PhiFunction::power(3.0).unwrap().with_domain(d)),
        ("var_exponent p=1.5+x", PhiFunction::var_exponent(field("1.5 + x"), d).unwrap()),
        (
            "double_phase p=1.5 q=3 mu=1",
            PhiFunction::double_phase(1.5.into(), 3.0.into(), 1.0.into(), false, d).unwrap(),
        ),
        (
            "double_phase p=1.2+0.3x^2 q=2.5 mu=x",
            PhiFunction::double_phase(field("1.2 + 0.3*x^2"), 2.5.into(), field("x"), false, d).unwrap(),
        ),
        (
            "log_double_phase p=1.5 q=2 mu=x",
            PhiFunction::log_double_phase(1.5.into(), 2.0.into(), field("x"), false, d).unwrap(),
        ),
        ("log_power p=2", PhiFunction::log_power(2.0.into(), d).unwrap()),
        (
            "sum t^1.5 + t^3",
            PhiFunction::sum(vec![
                PhiFunction::power(1.5).unwrap().with_domain(d),
                PhiFunction::power(3.0).unwrap().with_domain(d),
            ])
            .unwrap(),
        ),
        (
            "scaled 2.5 log_power p=1.5+0.5x",
            PhiFunction::scaled(2.5, PhiFunction::log_power(field("1.5 + 0.5*x"), d).unwrap()).unwrap(),
        ),
    ]
}
