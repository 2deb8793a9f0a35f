//! Spatial domains and scalar fields (exponents and weights) over them.

use crate::error::{Error, Result};
use crate::expr::Expr;

/// A point of the domain. One-dimensional domains ignore the second coordinate.
pub type Point = [f64; 2];

/// Number of sample points used to estimate the range of an expression field.
pub const BOUNDS_SAMPLES: usize = 10_000;

/// An axis-aligned interval or rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub dim: usize,
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Domain {
        Domain {
            dim: 1,
            x: (a, b),
            y: (0.0, 0.0),
        }
    }

    pub fn rectangle(a: f64, b: f64, c: f64, d: f64) -> Domain {
        Domain {
            dim: 2,
            x: (a, b),
            y: (c, d),
        }
    }

    /// The whole line; only x-independent functions may live here.
    pub fn unbounded() -> Domain {
        Domain::interval(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn unit_interval() -> Domain {
        Domain::interval(0.0, 1.0)
    }

    pub fn is_bounded(&self) -> bool {
        self.x.0.is_finite()
            && self.x.1.is_finite()
            && (self.dim == 1 || (self.y.0.is_finite() && self.y.1.is_finite()))
    }

    pub fn contains(&self, p: Point) -> bool {
        fn inside(v: f64, (lo, hi): (f64, f64)) -> bool {
            let slack = 1e-12 * (1.0 + lo.abs().max(hi.abs()).min(1e300));
            v >= lo - slack && v <= hi + slack
        }
        if !p[0].is_finite() || !p[1].is_finite() {
            return false;
        }
        inside(p[0], self.x) && (self.dim == 1 || inside(p[1], self.y))
    }

    /// `count` points spread uniformly over the domain (a tensor lattice in 2D).
    /// Unbounded domains return the single point at the origin.
    pub fn sample_points(&self, count: usize) -> Vec<Point> {
        if !self.is_bounded() {
            return vec![[0.0, 0.0]];
        }
        let count = count.max(2);
        let lin = |(a, b): (f64, f64), n: usize| -> Vec<f64> {
            (0..n)
                .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect()
        };
        match self.dim {
            1 => lin(self.x, count).into_iter().map(|x| [x, 0.0]).collect(),
            _ => {
                let m = ((count as f64).sqrt().ceil() as usize).max(2);
                let ys = lin(self.y, m);
                let xs = lin(self.x, m);
                ys.iter()
                    .flat_map(|&y| xs.iter().map(move |&x| [x, y]))
                    .collect()
            }
        }
    }
}

/// An exponent or weight function on the domain, with its (sampled) range.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    Expression {
        source: String,
        expr: Expr,
        lo: f64,
        hi: f64,
    },
}

impl ScalarField {
    pub fn constant(v: f64) -> ScalarField {
        ScalarField::Constant(v)
    }

    /// Parses `source`; non-constant expressions get their range estimated by
    /// dense sampling of `domain`, which is evidence rather than a rigorous bound.
    pub fn parse(source: &str, domain: &Domain) -> Result<ScalarField> {
        let expr = Expr::parse(source)?;
        if let Some(v) = expr.as_constant() {
            if !v.is_finite() {
                return Err(Error::Validation(vec![format!(
                    "expression {source:?} is not finite"
                )]));
            }
            return Ok(ScalarField::Constant(v));
        }
        if !domain.is_bounded() {
            return Err(Error::Validation(vec![format!(
                "expression {source:?} depends on x but the domain is unbounded"
            )]));
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in domain.sample_points(BOUNDS_SAMPLES) {
            let v = expr.eval(p[0], p[1]);
            if !v.is_finite() {
                return Err(Error::Validation(vec![format!(
                    "expression {source:?} is not finite at ({}, {})",
                    p[0], p[1]
                )]));
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok(ScalarField::Expression {
            source: source.to_string(),
            expr,
            lo,
            hi,
        })
    }

    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        match self {
            ScalarField::Constant(v) => *v,
            ScalarField::Expression { expr, .. } => expr.eval(p[0], p[1]),
        }
    }

    pub fn bounds(&self) -> (f64, f64) {
        match self {
            ScalarField::Constant(v) => (*v, *v),
            ScalarField::Expression { lo, hi, .. } => (*lo, *hi),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ScalarField::Constant(_))
    }

    pub fn source(&self) -> String {
        match self {
            ScalarField::Constant(v) => format!("{v}"),
            ScalarField::Expression { source, .. } => source.clone(),
        }
    }
}

impl From<f64> for ScalarField {
    fn from(v: f64) -> Self {
        ScalarField::Constant(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampled_bounds() {
        let f = ScalarField::parse("1.2 + 0.3*x^2", &Domain::unit_interval()).unwrap();
        let (lo, hi) = f.bounds();
        assert!((lo - 1.2).abs() < 1e-12);
        assert!((hi - 1.5).abs() < 1e-12);
    }

    #[test]
    fn constant_expressions_fold() {
        let f = ScalarField::parse("3/2", &Domain::unbounded()).unwrap();
        assert_eq!(f, ScalarField::Constant(1.5));
    }

    #[test]
    fn rejects_non_finite() {
        assert!(ScalarField::parse("1/x", &Domain::unit_interval()).is_err());
        assert!(ScalarField::parse("x", &Domain::unbounded()).is_err());
    }

    #[test]
    fn domain_membership() {
        let d = Domain::rectangle(0.0, 1.0, -1.0, 1.0);
        assert!(d.contains([0.5, -1.0]));
        assert!(!d.contains([1.5, 0.0]));
        assert!(Domain::unbounded().contains([1e9, 3.0]));
        assert_eq!(d.sample_points(64).len(), 64);
    }
}
