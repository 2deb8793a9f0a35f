//! Vector monotonicity inequalities for `a_φ(x, ξ) = φ'(x, |ξ|) ξ / |ξ|`.
//!
//! Covers the power-law inequalities (both the `r >= 2` and the weighted
//! `1 < r < 2` branch), an estimator for their best constants, and the
//! second-derivative form `(a_φ(ξ) − a_φ(η))·(ξ − η) >= C φ''(|ξ| + |η|) |ξ − η|²`.
//!
//! Pair witnesses record the pair up to rotation: `x = [cos∠(ξ, η), |ξ − η|]`,
//! `s = |ξ|`, `t = |η|`.

use rayon::prelude::*;

use crate::field::Point;
use crate::phi::PhiFunction;
use crate::report::{Extremum, PropertyReport, Witness};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorPair {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl VectorPair {
    pub fn new(xi: Vec<f64>, eta: Vec<f64>) -> VectorPair {
        assert_eq!(xi.len(), eta.len(), "pair components must share a dimension");
        VectorPair { xi, eta }
    }

    pub fn dim(&self) -> usize {
        self.xi.len()
    }

    pub fn swapped(&self) -> VectorPair {
        VectorPair::new(self.eta.clone(), self.xi.clone())
    }

    pub fn distance(&self) -> f64 {
        norm_diff(&self.xi, &self.eta)
    }

    fn witness(&self, lhs: f64, rhs: f64) -> Witness {
        let (a, b) = (norm(&self.xi), norm(&self.eta));
        let cos = if a > 0.0 && b > 0.0 {
            dot(&self.xi, &self.eta) / (a * b)
        } else {
            1.0
        };
        Witness::new([cos, self.distance()], a, b, lhs, rhs)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
fn norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `(F(ξ) − F(η))·(ξ − η)` for a radial field `F(v) = g(|v|) v`.
#[inline]
fn radial_pairing(g: impl Fn(f64) -> f64, xi: &[f64], eta: &[f64]) -> f64 {
    let (gx, ge) = (g(norm(xi)), g(norm(eta)));
    xi.iter()
        .zip(eta)
        .map(|(a, b)| (gx * a - ge * b) * (a - b))
        .sum()
}

/// `(a_φ(x, ξ) − a_φ(x, η))·(ξ − η)`, with `a_φ(x, 0) = 0`.
pub fn pairing(phi: &PhiFunction, x: Point, pair: &VectorPair) -> f64 {
    radial_pairing(|t| if t > 0.0 { phi.d1_at(x, t) / t } else { 0.0 }, &pair.xi, &pair.eta)
}

/// Constant of the power-law inequality for exponent `r`.
pub fn powerlaw_constant(r: f64) -> f64 {
    if r >= 2.0 {
        2f64.powf(2.0 - r).min(0.5)
    } else {
        r - 1.0
    }
}

/// Both sides of the power-law inequality for one pair, plus a magnitude
/// scale for the rounding tolerance.
fn powerlaw_sides(r: f64, xi: &[f64], eta: &[f64]) -> (f64, f64, f64) {
    let g = |t: f64| if t > 0.0 { t.powf(r - 2.0) } else { 0.0 };
    let inner = radial_pairing(g, xi, eta);
    let d = norm_diff(xi, eta);
    let (a, b) = (norm(xi), norm(eta));
    let scale_inner = (a.powf(r - 1.0) + b.powf(r - 1.0)) * d;
    if r >= 2.0 {
        (inner, d.powf(r), scale_inner)
    } else {
        let w = (a + b).powf(2.0 - r);
        (w * inner, d * d, w * scale_inner)
    }
}

/// Ratio `LHS / RHS` of the power-law inequality, excluding the constant.
pub fn powerlaw_ratio(r: f64, xi: &[f64], eta: &[f64]) -> f64 {
    let (lhs, rhs, _) = powerlaw_sides(r, xi, eta);
    lhs / rhs
}

fn verify_powerlaw(r: f64, pairs: &[VectorPair], name: &str) -> PropertyReport {
    let c = powerlaw_constant(r);
    let results: Vec<(Option<Witness>, Extremum)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            if p.distance() == 0.0 {
                return (None, Extremum::min_identity());
            }
            let (lhs, base, scale) = powerlaw_sides(r, &p.xi, &p.eta);
            let rhs = c * base;
            let bad = lhs < rhs - 1e-12 * (scale + rhs);
            let ratio = Extremum { value: lhs / base, index: i };
            (bad.then(|| p.witness(rhs, lhs)), ratio)
        })
        .collect();
    let min = results
        .iter()
        .map(|r| r.1)
        .fold(Extremum::min_identity(), Extremum::min);
    let witnesses: Vec<Witness> = results.into_iter().filter_map(|r| r.0).collect();
    if witnesses.is_empty() {
        PropertyReport::holds(name, &[("C_r", c), ("r", r), ("min_ratio", min.value)], pairs.len())
    } else {
        PropertyReport::fails(name, witnesses, pairs.len())
    }
}

/// `(|ξ|^{r−2}ξ − |η|^{r−2}η)·(ξ − η) >= C_r |ξ − η|^r` for `r >= 2`,
/// `C_r = min{2^{2−r}, 1/2}`. Witnesses store `lhs = C_r|ξ−η|^r`, `rhs = pairing`.
pub fn verify_powerlaw_ge2(r: f64, pairs: &[VectorPair]) -> PropertyReport {
    assert!(r >= 2.0, "r >= 2 required (got {r})");
    verify_powerlaw(r, pairs, "powerlaw_ge2")
}

/// `(|ξ| + |η|)^{2−r} (|ξ|^{r−2}ξ − |η|^{r−2}η)·(ξ − η) >= (r − 1)|ξ − η|²`
/// for `1 < r < 2`. Pairs with `ξ = η` are skipped.
pub fn verify_powerlaw_lt2(r: f64, pairs: &[VectorPair]) -> PropertyReport {
    assert!(r > 1.0 && r < 2.0, "1 < r < 2 required (got {r})");
    verify_powerlaw(r, pairs, "powerlaw_lt2")
}

/// Dispatches to the branch matching `r`.
pub fn verify_powerlaw_any(r: f64, pairs: &[VectorPair]) -> PropertyReport {
    if r >= 2.0 {
        verify_powerlaw_ge2(r, pairs)
    } else {
        verify_powerlaw_lt2(r, pairs)
    }
}

/// Reduced objective over `ξ = e₁`, `η = (η₁, η₂)` with `|η| <= 1`, `η₂ >= 0`.
fn reduced_ratio(r: f64, e1: f64, e2: f64) -> f64 {
    if !(e2 >= 0.0) || e1 * e1 + e2 * e2 > 1.0 {
        return f64::INFINITY;
    }
    let d2 = (1.0 - e1) * (1.0 - e1) + e2 * e2;
    if d2 < 1e-18 {
        return f64::INFINITY;
    }
    powerlaw_ratio(r, &[1.0, 0.0], &[e1, e2])
}

/// Samples of the reduced objective on an `n × n` lattice of
/// `[−1, 1] × [0, 1]`, feasible points only: `(η₁, η₂, ratio)`.
pub fn best_constant_table(r: f64, n: usize) -> Vec<(f64, f64, f64)> {
    let n = n.max(2);
    (0..n)
        .flat_map(|j| {
            let e2 = j as f64 / (n - 1) as f64;
            (0..n).map(move |i| {
                let e1 = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                (e1, e2, reduced_ratio(r, e1, e2))
            })
        })
        .filter(|v| v.2.is_finite())
        .collect()
}

/// Smallest value of `LHS / RHS` found by an `n × n` lattice search over the
/// reduced parameter space, polished by Nelder–Mead from the ten best cells.
/// Rotation invariance and homogeneity of both sides make the reduction exact.
pub fn estimate_best_constant_powerlaw(r: f64, n: usize) -> f64 {
    assert!(r > 1.0, "r > 1 required (got {r})");
    let n = n.max(2);
    let mut cells: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            let e2 = j as f64 / (n - 1) as f64;
            (0..n).map(move |i| {
                let e1 = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
                (reduced_ratio(r, e1, e2), e1, e2)
            })
        })
        .filter(|v| v.0.is_finite())
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    let step = 2.0 / (n - 1) as f64;
    let mut best = cells.first().map_or(f64::INFINITY, |c| c.0);
    for &(_, e1, e2) in cells.iter().take(10) {
        let v = nelder_mead_2d(|a, b| reduced_ratio(r, a, b), [e1, e2], step, 400);
        best = best.min(v);
    }
    best
}

/// Minimal Nelder–Mead on two variables; returns the best value seen.
fn nelder_mead_2d(f: impl Fn(f64, f64) -> f64, start: [f64; 2], step: f64, iters: usize) -> f64 {
    let eval = |p: [f64; 2]| f(p[0], p[1]);
    let mut simplex = [
        start,
        [start[0] + step, start[1]],
        [start[0], start[1] + step],
    ];
    let mut vals = simplex.map(eval);
    for _ in 0..iters {
        let mut order = [0usize, 1, 2];
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let [b, m, w] = order;
        if (vals[w] - vals[b]).abs() <= 1e-15 * vals[b].abs().max(1e-300)
            && (simplex[w][0] - simplex[b][0]).abs() + (simplex[w][1] - simplex[b][1]).abs() < 1e-14
        {
            break;
        }
        let c = [
            0.5 * (simplex[b][0] + simplex[m][0]),
            0.5 * (simplex[b][1] + simplex[m][1]),
        ];
        let along = |k: f64| [c[0] + k * (simplex[w][0] - c[0]), c[1] + k * (simplex[w][1] - c[1])];
        let refl = along(-1.0);
        let fr = eval(refl);
        if fr < vals[b] {
            let exp = along(-2.0);
            let fe = eval(exp);
            if fe < fr {
                simplex[w] = exp;
                vals[w] = fe;
            } else {
                simplex[w] = refl;
                vals[w] = fr;
            }
        } else if fr < vals[m] {
            simplex[w] = refl;
            vals[w] = fr;
        } else {
            let con = along(0.5);
            let fc = eval(con);
            if fc < vals[w] {
                simplex[w] = con;
                vals[w] = fc;
            } else {
                for k in [m, w] {
                    simplex[k] = [
                        simplex[b][0] + 0.5 * (simplex[k][0] - simplex[b][0]),
                        simplex[b][1] + 0.5 * (simplex[k][1] - simplex[b][1]),
                    ];
                    vals[k] = eval(simplex[k]);
                }
            }
        }
    }
    vals.into_iter().fold(f64::INFINITY, f64::min)
}

/// Ratio `pairing / (φ''(x, |ξ| + |η|) |ξ − η|²)`; `None` when `ξ = η`.
pub fn generalized_ratio(phi: &PhiFunction, x: Point, pair: &VectorPair) -> Option<f64> {
    let d = pair.distance();
    if d == 0.0 {
        return None;
    }
    let s = norm(&pair.xi) + norm(&pair.eta);
    Some(pairing(phi, x, pair) / (phi.d2_at(x, s) * d * d))
}

/// Estimates `C_x = inf pairing / (φ''(x, |ξ| + |η|)|ξ − η|²)`; holds when the
/// infimum is positive.
pub fn verify_generalized(phi: &PhiFunction, x: Point, pairs: &[VectorPair]) -> PropertyReport {
    const NAME: &str = "generalized_monotonicity";
    let results: Vec<(Option<Witness>, Extremum)> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, p)| match generalized_ratio(phi, x, p) {
            None => (None, Extremum::min_identity()),
            Some(ratio) => {
                // witness: 0 < ratio is violated
                let bad = !(ratio > 0.0);
                (
                    bad.then(|| p.witness(0.0, ratio)),
                    Extremum { value: ratio, index: i },
                )
            }
        })
        .collect();
    let min = results
        .iter()
        .map(|r| r.1)
        .fold(Extremum::min_identity(), Extremum::min);
    let witnesses: Vec<Witness> = results.into_iter().filter_map(|r| r.0).collect();
    if !witnesses.is_empty() {
        return PropertyReport::fails(NAME, witnesses, pairs.len());
    }
    if !min.value.is_finite() {
        return PropertyReport::inconclusive(NAME, pairs.len());
    }
    PropertyReport::holds(
        NAME,
        &[("C", min.value), ("x0", x[0]), ("x1", x[1])],
        pairs.len(),
    )
}

/// Seeded pairs: components uniform in `[−10, 10]`, with every tenth pair
/// replaced by a targeted degenerate configuration (nearly equal vectors,
/// `η` at or near zero, `η` antiparallel to `ξ`, `ξ = 0`).
pub fn sample_pairs(rng: &mut SeededRng, count: usize, dim: usize) -> Vec<VectorPair> {
    (0..count)
        .map(|i| {
            let xi = rng.vector(dim, -10.0, 10.0);
            if i % 10 != 9 {
                let eta = rng.vector(dim, -10.0, 10.0);
                return VectorPair::new(xi, eta);
            }
            let eta = match (i / 10) % 6 {
                0 => {
                    let eps = rng.log_uniform(-8.0, -6.0);
                    xi.iter().map(|v| v + eps * rng.uniform(-1.0, 1.0)).collect()
                }
                1 => {
                    // radial perturbation of ξ
                    let eps = rng.log_uniform(-8.0, -6.0);
                    xi.iter().map(|v| v * (1.0 + eps)).collect()
                }
                2 => rng.vector(dim, -1e-8, 1e-8),
                3 => vec![0.0; dim],
                4 => {
                    let lambda = rng.uniform(0.0, 1.5);
                    xi.iter().map(|v| -lambda * v).collect()
                }
                _ => {
                    return VectorPair::new(vec![0.0; dim], xi);
                }
            };
            VectorPair::new(xi, eta)
        })
        .collect()
}

/// Rotates the first two components of both vectors by `angle`.
pub fn rotate_pair(pair: &VectorPair, angle: f64) -> VectorPair {
    let (s, c) = angle.sin_cos();
    let rot = |v: &[f64]| {
        let mut w = v.to_vec();
        w[0] = c * v[0] - s * v[1];
        w[1] = s * v[0] + c * v[1];
        w
    };
    VectorPair::new(rot(&pair.xi), rot(&pair.eta))
}
