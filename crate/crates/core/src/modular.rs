//! Modulars by quadrature and Luxemburg norms by bisection.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{pairwise_sum, Grid, GridFunction};
use crate::phi::PhiFunction;
use crate::report::{PropertyReport, Witness};
use crate::rng::SeededRng;

pub const LUXEMBURG_TOLERANCE: f64 = 1e-12;
pub const LUXEMBURG_MAX_ITERATIONS: usize = 200;
/// Relative slack for the quadrature-level inequality checks.
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// `Σ w_i φ(x_i, |u_i|)` over the nodes.
pub fn modular(phi: &PhiFunction, u: &GridFunction) -> f64 {
    nodal_modular(phi, u.grid(), u.values(), 1.0)
}

/// `Σ w_i φ(x_i, |u_i| / λ)`.
pub(crate) fn nodal_modular(phi: &PhiFunction, grid: &Grid, u: &[f64], lambda: f64) -> f64 {
    let terms: Vec<f64> = u
        .iter()
        .zip(grid.weights())
        .enumerate()
        .map(|(k, (v, w))| w * phi.value_at(grid.point(k), v.abs() / lambda))
        .collect();
    pairwise_sum(&terms)
}

/// `Σ_cells area φ(x_c, |∇u|_c / λ)` with midpoint gradients.
pub(crate) fn cell_modular(phi: &PhiFunction, grid: &Grid, u: &[f64], lambda: f64) -> f64 {
    let terms: Vec<f64> = grid
        .cells()
        .iter()
        .map(|c| {
            let g = c.gradient(u);
            c.area * phi.value_at(c.mid, g[0].hypot(g[1]) / lambda)
        })
        .collect();
    pairwise_sum(&terms)
}

/// Modular of `|∇u|` over the cells.
pub fn gradient_modular(phi: &PhiFunction, u: &GridFunction) -> f64 {
    cell_modular(phi, u.grid(), u.values(), 1.0)
}

/// `ρ_{1,φ}(u) = ρ_φ(u) + ρ_φ(|∇u|)`.
pub fn sobolev_modular(phi: &PhiFunction, u: &GridFunction) -> f64 {
    modular(phi, u) + gradient_modular(phi, u)
}

/// Modular of the conjugate, `Σ w_i φ*(x_i, |v_i| / λ)`.
fn conjugate_modular_scaled(phi: &PhiFunction, grid: &Grid, v: &[f64], lambda: f64) -> Result<f64> {
    let terms = v
        .iter()
        .zip(grid.weights())
        .enumerate()
        .map(|(k, (s, w))| Ok(w * phi.conjugate_eval(grid.point(k), s.abs() / lambda)?))
        .collect::<Result<Vec<f64>>>()?;
    Ok(pairwise_sum(&terms))
}

pub fn conjugate_modular(phi: &PhiFunction, v: &GridFunction) -> Result<f64> {
    conjugate_modular_scaled(phi, v.grid(), v.values(), 1.0)
}

/// `inf{λ > 0 : ρ(λ) ≤ 1}` for a nonincreasing `ρ(λ)` (the modular of
/// `u/λ`). The caller handles the zero function.
pub fn luxemburg<F>(mut rho: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut lo, mut hi);
    if rho(1.0)? <= 1.0 {
        hi = 1.0;
        lo = 0.5;
        while rho(lo)? <= 1.0 {
            hi = lo;
            lo *= 0.5;
            if lo < 1e-300 {
                return Err(Error::NonConvergence("Luxemburg bracket fell below 1e-300".into()));
            }
        }
    } else {
        lo = 1.0;
        hi = 2.0;
        while rho(hi)? > 1.0 {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::NonConvergence("Luxemburg bracket exceeded 1e300".into()));
            }
        }
    }
    for _ in 0..LUXEMBURG_MAX_ITERATIONS {
        if hi - lo <= LUXEMBURG_TOLERANCE * hi {
            return Ok(0.5 * (lo + hi));
        }
        let mid = 0.5 * (lo + hi);
        if rho(mid)? <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(Error::NonConvergence(format!(
        "Luxemburg bisection did not reach tolerance in {LUXEMBURG_MAX_ITERATIONS} steps"
    )))
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|x| *x == 0.0)
}

pub fn luxemburg_norm(phi: &PhiFunction, u: &GridFunction) -> Result<f64> {
    if is_zero(u.values()) {
        return Ok(0.0);
    }
    luxemburg(|l| Ok(nodal_modular(phi, u.grid(), u.values(), l)))
}

/// Luxemburg norm of `|∇u|` over the cells.
pub fn gradient_norm(phi: &PhiFunction, u: &GridFunction) -> Result<f64> {
    let grid = u.grid();
    if grid.cells().iter().all(|c| c.gradient(u.values()) == [0.0, 0.0]) {
        return Ok(0.0);
    }
    luxemburg(|l| Ok(cell_modular(phi, grid, u.values(), l)))
}

/// Luxemburg norm with respect to `φ*`.
pub fn conjugate_norm(phi: &PhiFunction, v: &GridFunction) -> Result<f64> {
    if is_zero(v.values()) {
        return Ok(0.0);
    }
    luxemburg(|l| conjugate_modular_scaled(phi, v.grid(), v.values(), l))
}

/// `(1/a) min{‖u‖^p, ‖u‖^q} ≤ ρ(u) ≤ a max{‖u‖^p, ‖u‖^q}`.
pub fn norm_modular_sandwich_check(
    phi: &PhiFunction,
    u: &GridFunction,
    p: f64,
    q: f64,
    a: f64,
) -> Result<PropertyReport> {
    let rho = modular(phi, u);
    let norm = luxemburg_norm(phi, u)?;
    let (np, nq) = (norm.powf(p), norm.powf(q));
    let lower = np.min(nq) / a;
    let upper = a * np.max(nq);
    let slack = |v: f64| CHECK_TOLERANCE * v.abs().max(f64::MIN_POSITIVE);
    let property = "norm_modular_sandwich";
    if lower > rho + slack(rho) {
        return Ok(PropertyReport::fails(
            property,
            vec![Witness::new([0.0, 0.0], norm, rho, lower, rho)],
            1,
        ));
    }
    if rho > upper + slack(upper) {
        return Ok(PropertyReport::fails(
            property,
            vec![Witness::new([0.0, 0.0], norm, rho, rho, upper)],
            1,
        ));
    }
    Ok(PropertyReport::holds(
        property,
        &[("norm", norm), ("modular", rho), ("lower", lower), ("upper", upper)],
        1,
    ))
}

/// `∫|u||v| ≤ 2 ‖u‖_φ ‖v‖_{φ*}`.
pub fn hoelder_check(phi: &PhiFunction, u: &GridFunction, v: &GridFunction) -> Result<PropertyReport> {
    if !Arc::ptr_eq(u.grid(), v.grid()) && u.grid() != v.grid() {
        return Err(Error::DimensionMismatch {
            expected: u.grid().len(),
            got: v.grid().len(),
        });
    }
    let grid = u.grid();
    let terms: Vec<f64> = u
        .values()
        .iter()
        .zip(v.values())
        .zip(grid.weights())
        .map(|((a, b), w)| w * (a * b).abs())
        .collect();
    let lhs = pairwise_sum(&terms);
    let nu = luxemburg_norm(phi, u)?;
    let nv = conjugate_norm(phi, v)?;
    let bound = 2.0 * nu * nv;
    if lhs > bound * (1.0 + CHECK_TOLERANCE) {
        return Ok(PropertyReport::fails(
            "hoelder",
            vec![Witness::new([0.0, 0.0], nu, nv, lhs, bound)],
            1,
        ));
    }
    Ok(PropertyReport::holds(
        "hoelder",
        &[("lhs", lhs), ("bound", bound), ("norm_u", nu), ("norm_v_conjugate", nv)],
        1,
    ))
}

/// Random nodal function: smooth sine modes or rough noise, at a random
/// magnitude spanning four decades.
pub fn random_grid_function(grid: &Arc<Grid>, rng: &mut SeededRng, zero_boundary: bool) -> GridFunction {
    let scale = rng.log_uniform(-2.0, 2.0);
    let values: Vec<f64> = if rng.index(2) == 0 {
        let modes = random_modes(rng, 4);
        sine_series(grid, &modes).into_iter().map(|v| scale * v).collect()
    } else {
        (0..grid.len())
            .map(|k| {
                if zero_boundary && grid.is_boundary(k) {
                    0.0
                } else {
                    scale * rng.uniform(-1.0, 1.0)
                }
            })
            .collect()
    };
    let mut values = values;
    if !zero_boundary {
        let shift = scale * rng.uniform(-1.0, 1.0);
        values.iter_mut().for_each(|v| *v += shift);
    }
    GridFunction::new(grid.clone(), values).expect("finite values")
}

/// Coefficients `c_{kl}` with decay `1/(k l)^2`.
fn random_modes(rng: &mut SeededRng, count: usize) -> Vec<(usize, usize, f64)> {
    let mut modes = Vec::with_capacity(count * count);
    for k in 1..=count {
        for l in 1..=count {
            let c = rng.uniform(-1.0, 1.0) / ((k * l) as f64).powi(2);
            modes.push((k, l, c));
        }
    }
    modes
}

/// `Σ c sin(kπ ξ) sin(lπ ζ)` in reference coordinates; vanishes on the boundary.
fn sine_series(grid: &Grid, modes: &[(usize, usize, f64)]) -> Vec<f64> {
    let d = grid.domain();
    (0..grid.len())
        .map(|k| {
            if grid.is_boundary(k) {
                return 0.0;
            }
            let p = grid.point(k);
            let xi = (p[0] - d.x.0) / (d.x.1 - d.x.0);
            let zeta = if grid.dim() == 2 {
                (p[1] - d.y.0) / (d.y.1 - d.y.0)
            } else {
                0.5
            };
            modes
                .iter()
                .filter(|m| grid.dim() == 2 || m.1 == 1)
                .map(|&(a, b, c)| c * (a as f64 * PI * xi).sin() * (b as f64 * PI * zeta).sin())
                .sum()
        })
        .collect()
}

/// Largest `‖u‖_φ / ‖∇u‖_φ` over `trials` zero-boundary functions. The first
/// trial is the fundamental sine mode; the rest are random.
pub fn poincare_probe(phi: &PhiFunction, grid: &Arc<Grid>, trials: usize, rng: &mut SeededRng) -> Result<f64> {
    let mut best: f64 = 0.0;
    for trial in 0..trials {
        let u = if trial == 0 {
            GridFunction::new(grid.clone(), sine_series(grid, &[(1, 1, 1.0)]))?
        } else {
            random_grid_function(grid, rng, true)
        };
        let gu = gradient_norm(phi, &u)?;
        if gu == 0.0 {
            continue;
        }
        best = best.max(luxemburg_norm(phi, &u)? / gu);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> PhiFunction {
        PhiFunction::power(2.0).unwrap()
    }

    fn unit_grid(n: usize) -> Arc<Grid> {
        Arc::new(Grid::interval(0.0, 1.0, n).unwrap())
    }

    #[test]
    fn modular_examples() {
        let g = unit_grid(101);
        let two = GridFunction::from_fn(g.clone(), |_| 2.0);
        assert!((modular(&square(), &two) - 4.0).abs() < 1e-12);
        assert_eq!(modular(&square(), &GridFunction::zeros(g.clone())), 0.0);
        let x = GridFunction::from_fn(g, |p| p[0]);
        assert!((modular(&square(), &x) - 1.0 / 3.0).abs() < 1e-4);
        assert!((sobolev_modular(&square(), &x) - 4.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn norm_examples() {
        let g = unit_grid(51);
        let two = GridFunction::from_fn(g.clone(), |_| 2.0);
        assert!((luxemburg_norm(&square(), &two).unwrap() - 2.0).abs() < 1e-11);
        assert_eq!(luxemburg_norm(&square(), &GridFunction::zeros(g)).unwrap(), 0.0);
    }

    #[test]
    fn power_norm_identity() {
        let g = unit_grid(41);
        let phi = PhiFunction::power(3.0).unwrap();
        let mut rng = SeededRng::new(11);
        for _ in 0..50 {
            let u = random_grid_function(&g, &mut rng, false);
            let n = luxemburg_norm(&phi, &u).unwrap();
            let m = modular(&phi, &u);
            assert!((n.powi(3) - m).abs() <= 1e-10 * m, "{n} {m}");
        }
    }

    #[test]
    fn hoelder_equality_case() {
        let g = unit_grid(21);
        let one = GridFunction::from_fn(g, |_| 1.0);
        let r = hoelder_check(&square(), &one, &one).unwrap();
        assert!(r.is_holds());
        assert!((r.constant("lhs").unwrap() - 1.0).abs() < 1e-12);
        assert!((r.constant("bound").unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sandwich_collapses_for_squares() {
        let g = unit_grid(21);
        let u = GridFunction::from_fn(g, |p| (3.0 * p[0]).sin());
        let r = norm_modular_sandwich_check(&square(), &u, 2.0, 2.0, 1.0).unwrap();
        assert!(r.is_holds());
        let (lo, hi) = (r.constant("lower").unwrap(), r.constant("upper").unwrap());
        assert!((lo - hi).abs() < 1e-10 * hi);
    }

    #[test]
    fn poincare_square_near_inverse_pi() {
        let g = unit_grid(201);
        let c = poincare_probe(&square(), &g, 20, &mut SeededRng::new(5)).unwrap();
        assert!(c > 0.3 && c <= 0.35, "{c}");
        assert!((c - 1.0 / PI).abs() < 1e-3, "{c}");
    }
}
