//! Generalized Φ-functions: evaluation, t-derivatives and convex conjugates.
//!
//! All built-in families are sums of two kinds of terms,
//!
//! ```text
//! power term  t^p
//! log term    t^q log(e + t)
//! ```
//!
//! with exponents and weights that may vary in space. Derivatives in `t` are
//! closed-form. The `normalized` flag inserts the `1/p(x)` and `1/q(x)`
//! energy factors.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Domain, Point, ScalarField};

/// Upper end of the bracket search used by the numeric conjugate.
pub const CONJUGATE_BRACKET_MAX: f64 = 1e12;
const CONJUGATE_BRACKET_MIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Power,
    VarExponent,
    DoublePhase,
    LogDoublePhase,
    LogPower,
    Sum,
    Scaled,
}

/// Declarative description of a Φ-function. Fields are expression strings in
/// the coordinates `x`, `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyDescriptor {
    Power {
        p: String,
        #[serde(default)]
        normalized: bool,
    },
    VarExponent {
        p: String,
        #[serde(default)]
        normalized: bool,
    },
    DoublePhase {
        p: String,
        q: String,
        mu: String,
        #[serde(default)]
        normalized: bool,
    },
    LogDoublePhase {
        p: String,
        q: String,
        mu: String,
        #[serde(default)]
        normalized: bool,
    },
    LogPower {
        p: String,
        #[serde(default)]
        normalized: bool,
    },
    Sum {
        children: Vec<FamilyDescriptor>,
    },
    Scaled {
        scale: f64,
        child: Box<FamilyDescriptor>,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Power {
        p: ScalarField,
        normalized: bool,
    },
    VarExponent {
        p: ScalarField,
        normalized: bool,
    },
    DoublePhase {
        p: ScalarField,
        q: ScalarField,
        mu: ScalarField,
        normalized: bool,
    },
    LogDoublePhase {
        p: ScalarField,
        q: ScalarField,
        mu: ScalarField,
        normalized: bool,
    },
    LogPower {
        p: ScalarField,
        normalized: bool,
    },
    Sum(Vec<PhiFunction>),
    Scaled(f64, Box<PhiFunction>),
}

/// A validated generalized Φ-function `φ(x, t)` on a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiFunction {
    kind: Kind,
    domain: Domain,
}

/// `t^e`, with the `t = 0` limits spelled out.
#[inline]
fn tpow(t: f64, e: f64) -> f64 {
    if t > 0.0 {
        t.powf(e)
    } else if e > 0.0 {
        0.0
    } else if e == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

#[inline]
fn power_term(t: f64, p: f64, order: u8) -> f64 {
    match order {
        0 => tpow(t, p),
        1 => p * tpow(t, p - 1.0),
        _ => {
            if p == 1.0 {
                0.0
            } else {
                p * (p - 1.0) * tpow(t, p - 2.0)
            }
        }
    }
}

#[inline]
fn log_term(t: f64, q: f64, order: u8) -> f64 {
    let l = (E + t).ln();
    match order {
        0 => tpow(t, q) * l,
        1 => q * tpow(t, q - 1.0) * l + tpow(t, q) / (E + t),
        _ => {
            let lead = if q == 1.0 {
                0.0
            } else {
                q * (q - 1.0) * tpow(t, q - 2.0) * l
            };
            lead + 2.0 * q * tpow(t, q - 1.0) / (E + t) - tpow(t, q) / ((E + t) * (E + t))
        }
    }
}

fn check_exponent(name: &str, f: &ScalarField, errs: &mut Vec<String>) {
    let (lo, _) = f.bounds();
    if !(lo > 1.0) {
        errs.push(format!("exponent {name} must exceed 1 (lower bound {lo})"));
    }
}

fn check_weight(name: &str, f: &ScalarField, errs: &mut Vec<String>) {
    let (lo, _) = f.bounds();
    if !(lo >= 0.0) {
        errs.push(format!("weight {name} must be nonnegative (lower bound {lo})"));
    }
}

impl PhiFunction {
    fn validated(kind: Kind, domain: Domain) -> Result<PhiFunction> {
        let mut errs = Vec::new();
        match &kind {
            Kind::Power { p, .. } => {
                check_exponent("p", p, &mut errs);
                if !p.is_constant() {
                    errs.push("power family needs a constant exponent; use var_exponent".into());
                }
            }
            Kind::VarExponent { p, .. } | Kind::LogPower { p, .. } => check_exponent("p", p, &mut errs),
            Kind::DoublePhase { p, q, mu, .. } | Kind::LogDoublePhase { p, q, mu, .. } => {
                check_exponent("p", p, &mut errs);
                check_exponent("q", q, &mut errs);
                check_weight("mu", mu, &mut errs);
            }
            Kind::Sum(children) => {
                if children.is_empty() {
                    errs.push("sum needs at least one child".into());
                }
            }
            Kind::Scaled(s, _) => {
                if !(*s > 0.0 && s.is_finite()) {
                    errs.push(format!("scale must be positive and finite (got {s})"));
                }
            }
        }
        if errs.is_empty() {
            Ok(PhiFunction { kind, domain })
        } else {
            Err(Error::Validation(errs))
        }
    }

    /// `t^p` with constant `p`, defined everywhere.
    pub fn power(p: f64) -> Result<PhiFunction> {
        Self::validated(
            Kind::Power {
                p: p.into(),
                normalized: false,
            },
            Domain::unbounded(),
        )
    }

    pub fn var_exponent(p: ScalarField, domain: Domain) -> Result<PhiFunction> {
        Self::validated(Kind::VarExponent { p, normalized: false }, domain)
    }

    /// `t^p + μ t^q` (divided by `p`, `q` respectively when normalized).
    pub fn double_phase(
        p: ScalarField,
        q: ScalarField,
        mu: ScalarField,
        normalized: bool,
        domain: Domain,
    ) -> Result<PhiFunction> {
        Self::validated(
            Kind::DoublePhase {
                p,
                q,
                mu,
                normalized,
            },
            domain,
        )
    }

    /// `t^p + μ t^q log(e + t)` (divided by `p`, `q` respectively when normalized).
    pub fn log_double_phase(
        p: ScalarField,
        q: ScalarField,
        mu: ScalarField,
        normalized: bool,
        domain: Domain,
    ) -> Result<PhiFunction> {
        Self::validated(
            Kind::LogDoublePhase {
                p,
                q,
                mu,
                normalized,
            },
            domain,
        )
    }

    /// `t^p log(e + t)`.
    pub fn log_power(p: ScalarField, domain: Domain) -> Result<PhiFunction> {
        Self::validated(Kind::LogPower { p, normalized: false }, domain)
    }

    /// Pointwise sum; the domain is the first child's.
    pub fn sum(children: Vec<PhiFunction>) -> Result<PhiFunction> {
        let domain = children
            .iter()
            .map(|c| c.domain)
            .find(Domain::is_bounded)
            .or_else(|| children.first().map(|c| c.domain))
            .unwrap_or_else(Domain::unbounded);
        Self::validated(Kind::Sum(children), domain)
    }

    pub fn scaled(scale: f64, child: PhiFunction) -> Result<PhiFunction> {
        let domain = child.domain;
        Self::validated(Kind::Scaled(scale, Box::new(child)), domain)
    }

    /// Builds and validates a Φ-function from its declarative description.
    pub fn make_family(desc: &FamilyDescriptor, domain: &Domain) -> Result<PhiFunction> {
        let field = |s: &str| ScalarField::parse(s, domain);
        let mut errs = Vec::new();
        let mut parsed = |s: &str| match field(s) {
            Ok(f) => Some(f),
            Err(Error::Validation(v)) => {
                errs.extend(v);
                None
            }
            Err(e) => {
                errs.push(e.to_string());
                None
            }
        };
        let kind = match desc {
            FamilyDescriptor::Power { p, normalized } => parsed(p).map(|p| Kind::Power {
                p,
                normalized: *normalized,
            }),
            FamilyDescriptor::VarExponent { p, normalized } => parsed(p).map(|p| Kind::VarExponent {
                p,
                normalized: *normalized,
            }),
            FamilyDescriptor::LogPower { p, normalized } => parsed(p).map(|p| Kind::LogPower {
                p,
                normalized: *normalized,
            }),
            FamilyDescriptor::DoublePhase {
                p,
                q,
                mu,
                normalized,
            } => match (parsed(p), parsed(q), parsed(mu)) {
                (Some(p), Some(q), Some(mu)) => Some(Kind::DoublePhase {
                    p,
                    q,
                    mu,
                    normalized: *normalized,
                }),
                _ => None,
            },
            FamilyDescriptor::LogDoublePhase {
                p,
                q,
                mu,
                normalized,
            } => match (parsed(p), parsed(q), parsed(mu)) {
                (Some(p), Some(q), Some(mu)) => Some(Kind::LogDoublePhase {
                    p,
                    q,
                    mu,
                    normalized: *normalized,
                }),
                _ => None,
            },
            FamilyDescriptor::Sum { children } => {
                let mut built = Vec::new();
                for c in children {
                    match Self::make_family(c, domain) {
                        Ok(f) => built.push(f),
                        Err(Error::Validation(v)) => errs.extend(v),
                        Err(e) => errs.push(e.to_string()),
                    }
                }
                Some(Kind::Sum(built))
            }
            FamilyDescriptor::Scaled { scale, child } => match Self::make_family(child, domain) {
                Ok(c) => Some(Kind::Scaled(*scale, Box::new(c))),
                Err(Error::Validation(v)) => {
                    errs.extend(v);
                    None
                }
                Err(e) => {
                    errs.push(e.to_string());
                    None
                }
            },
        };
        let built = kind.map(|k| Self::validated(k, *domain));
        match built {
            Some(Err(Error::Validation(v))) => errs.extend(v),
            Some(Err(e)) => errs.push(e.to_string()),
            Some(Ok(phi)) if errs.is_empty() => return Ok(phi),
            _ => {}
        }
        Err(Error::Validation(errs))
    }

    pub fn family(&self) -> Family {
        match self.kind {
            Kind::Power { .. } => Family::Power,
            Kind::VarExponent { .. } => Family::VarExponent,
            Kind::DoublePhase { .. } => Family::DoublePhase,
            Kind::LogDoublePhase { .. } => Family::LogDoublePhase,
            Kind::LogPower { .. } => Family::LogPower,
            Kind::Sum(_) => Family::Sum,
            Kind::Scaled(..) => Family::Scaled,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Re-homes the function on another domain (used when a grid is attached).
    pub fn with_domain(mut self, domain: Domain) -> PhiFunction {
        if let Kind::Sum(children) = &mut self.kind {
            for c in children.iter_mut() {
                *c = c.clone().with_domain(domain);
            }
        }
        if let Kind::Scaled(_, c) = &mut self.kind {
            **c = (**c).clone().with_domain(domain);
        }
        self.domain = domain;
        self
    }

    pub fn normalized(&self) -> bool {
        match &self.kind {
            Kind::Power { normalized, .. }
            | Kind::VarExponent { normalized, .. }
            | Kind::LogPower { normalized, .. }
            | Kind::DoublePhase { normalized, .. }
            | Kind::LogDoublePhase { normalized, .. } => *normalized,
            Kind::Sum(c) => c.iter().any(PhiFunction::normalized),
            Kind::Scaled(_, c) => c.normalized(),
        }
    }

    /// Same function with the `1/p(x)`, `1/q(x)` factors switched on or off
    /// in every term.
    pub fn with_normalized(mut self, on: bool) -> PhiFunction {
        match &mut self.kind {
            Kind::Power { normalized, .. }
            | Kind::VarExponent { normalized, .. }
            | Kind::LogPower { normalized, .. }
            | Kind::DoublePhase { normalized, .. }
            | Kind::LogDoublePhase { normalized, .. } => *normalized = on,
            Kind::Sum(children) => {
                for c in children.iter_mut() {
                    *c = c.clone().with_normalized(on);
                }
            }
            Kind::Scaled(_, c) => **c = (**c).clone().with_normalized(on),
        }
        self
    }

    /// True when no field depends on the point.
    pub fn is_x_independent(&self) -> bool {
        match &self.kind {
            Kind::Power { p, .. } | Kind::VarExponent { p, .. } | Kind::LogPower { p, .. } => p.is_constant(),
            Kind::DoublePhase { p, q, mu, .. } | Kind::LogDoublePhase { p, q, mu, .. } => {
                p.is_constant() && q.is_constant() && mu.is_constant()
            }
            Kind::Sum(c) => c.iter().all(PhiFunction::is_x_independent),
            Kind::Scaled(_, c) => c.is_x_independent(),
        }
    }

    fn check(&self, x: Point, t: f64) -> Result<()> {
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!(
                "point ({}, {}) lies outside the domain",
                x[0], x[1]
            )));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("argument t = {t} must be finite and >= 0")));
        }
        Ok(())
    }

    /// `φ(x, t)`.
    pub fn eval(&self, x: Point, t: f64) -> Result<f64> {
        self.check(x, t)?;
        Ok(self.value_at(x, t))
    }

    /// `∂φ/∂t (x, t)`; zero at `t = 0`.
    pub fn d1(&self, x: Point, t: f64) -> Result<f64> {
        self.check(x, t)?;
        Ok(self.d1_at(x, t))
    }

    /// `∂²φ/∂t² (x, t)`. Singular at `t = 0` whenever an exponent is below 2.
    pub fn d2(&self, x: Point, t: f64) -> Result<f64> {
        self.check(x, t)?;
        let v = self.d2_at(x, t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!(
                "second derivative is singular at t = {t} (exponent below 2)"
            )))
        }
    }

    /// Unchecked `φ(x, t)`.
    #[inline]
    pub fn value_at(&self, x: Point, t: f64) -> f64 {
        self.component(x, t, 0)
    }

    /// Unchecked first derivative.
    #[inline]
    pub fn d1_at(&self, x: Point, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        self.component(x, t, 1)
    }

    /// Unchecked second derivative; may be infinite at `t = 0`.
    #[inline]
    pub fn d2_at(&self, x: Point, t: f64) -> f64 {
        self.component(x, t, 2)
    }

    fn component(&self, x: Point, t: f64, order: u8) -> f64 {
        match &self.kind {
            Kind::Power { p, normalized } | Kind::VarExponent { p, normalized } => {
                let p = p.eval(x);
                let v = power_term(t, p, order);
                if *normalized {
                    v / p
                } else {
                    v
                }
            }
            Kind::LogPower { p, normalized } => {
                let p = p.eval(x);
                let v = log_term(t, p, order);
                if *normalized {
                    v / p
                } else {
                    v
                }
            }
            Kind::DoublePhase {
                p,
                q,
                mu,
                normalized,
            } => {
                let (p, q, m) = (p.eval(x), q.eval(x), mu.eval(x));
                let (np, nq) = if *normalized { (p, q) } else { (1.0, 1.0) };
                let second = if m == 0.0 {
                    0.0
                } else {
                    m * power_term(t, q, order) / nq
                };
                power_term(t, p, order) / np + second
            }
            Kind::LogDoublePhase {
                p,
                q,
                mu,
                normalized,
            } => {
                let (p, q, m) = (p.eval(x), q.eval(x), mu.eval(x));
                let (np, nq) = if *normalized { (p, q) } else { (1.0, 1.0) };
                let second = if m == 0.0 {
                    0.0
                } else {
                    m * log_term(t, q, order) / nq
                };
                power_term(t, p, order) / np + second
            }
            Kind::Sum(children) => children.iter().map(|c| c.component(x, t, order)).sum(),
            Kind::Scaled(s, c) => s * c.component(x, t, order),
        }
    }

    /// Closed-form conjugate when one exists (power laws and their multiples).
    pub fn conjugate_closed_form(&self, x: Point, s: f64) -> Option<f64> {
        match &self.kind {
            Kind::Power { p, normalized } | Kind::VarExponent { p, normalized } => {
                let p = p.eval(x);
                Some(if *normalized {
                    power_conjugate(p, p * s) / p
                } else {
                    power_conjugate(p, s)
                })
            }
            Kind::Scaled(c, child) => child.conjugate_closed_form(x, s / c).map(|v| c * v),
            _ => None,
        }
    }

    /// `φ*(x, s) = sup_{t >= 0} (t s − φ(x, t))`.
    pub fn conjugate_eval(&self, x: Point, s: f64) -> Result<f64> {
        self.check(x, s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        match self.conjugate_closed_form(x, s) {
            Some(v) => Ok(v),
            None => self.conjugate_numeric(x, s),
        }
    }

    /// Numeric conjugate: brackets the maximizer of the concave objective
    /// `t ↦ t s − φ(x, t)` by decades starting from `[1e-9, 1]`, then bisects
    /// on the sign of its slope `s − φ'(x, t)`.
    pub fn conjugate_numeric(&self, x: Point, s: f64) -> Result<f64> {
        let (lo, hi) = self.conjugate_bracket(x, s)?;
        let (mut lo, mut hi) = (lo, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if s - self.d1_at(x, mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let objective = |t: f64| t * s - self.value_at(x, t);
        Ok(objective(lo).max(objective(hi)).max(0.0))
    }

    /// Derivative-free route to the conjugate: the same bracket followed by
    /// 200 ternary-search steps on the concave objective.
    pub fn conjugate_ternary(&self, x: Point, s: f64) -> Result<f64> {
        let (mut lo, mut hi) = self.conjugate_bracket(x, s)?;
        let objective = |t: f64| t * s - self.value_at(x, t);
        for _ in 0..200 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if objective(m1) < objective(m2) {
                lo = m1;
            } else {
                hi = m2;
            }
        }
        Ok(objective(0.5 * (lo + hi)).max(0.0))
    }

    /// Interval containing the maximizer of `t s − φ(x, t)`.
    fn conjugate_bracket(&self, x: Point, s: f64) -> Result<(f64, f64)> {
        if s - self.d1_at(x, CONJUGATE_BRACKET_MIN) <= 0.0 {
            return Ok((0.0, CONJUGATE_BRACKET_MIN));
        }
        let mut lo = CONJUGATE_BRACKET_MIN;
        let mut hi = 1.0;
        while s - self.d1_at(x, hi) > 0.0 {
            lo = hi;
            hi *= 10.0;
            if hi > CONJUGATE_BRACKET_MAX {
                return Err(Error::NonConvergence(format!(
                    "conjugate bracket exceeded t = {CONJUGATE_BRACKET_MAX:e} at s = {s}"
                )));
            }
        }
        Ok((lo, hi))
    }
}

/// Legendre transform of `t^p`: `(p − 1) p^{−p/(p−1)} s^{p/(p−1)}`.
pub fn power_conjugate(p: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    let pc = p / (p - 1.0);
    (p - 1.0) * p.powf(-pc) * s.powf(pc)
}
