//! Sampling-based checkers and constant estimators for structural properties
//! of Φ-functions: almost monotonicity of `t^{-p} φ`, the doubling conditions,
//! comparability of `t φ''` with `φ'`, the behaviour of `φ''`, Young's
//! inequality and the conjugate inequality.
//!
//! Every checker is deterministic in its inputs. Grids are supplied by the
//! caller; [`default_t_grid`] and [`default_x_samples`] give the usual ones.

use rayon::prelude::*;

use crate::field::{Domain, Point};
use crate::phi::PhiFunction;
use crate::report::{PropertyReport, Witness};
use crate::rng::SeededRng;

/// Largest "almost" constant accepted when estimating exponents.
pub const ALMOST_TOLERANCE: f64 = 1.01;
/// Constants within this distance of 1 are reported as exactly 1.
pub const EXACT_MONOTONE_SLACK: f64 = 1e-9;
/// Resolution of the exponent search.
pub const EXPONENT_RESOLUTION: f64 = 1e-3;
pub const MAX_EXPONENT: f64 = 50.0;
/// Relative change allowed when the t-grid density is doubled.
pub const REFINEMENT_TOLERANCE: f64 = 0.01;
/// Largest almost-monotonicity constant accepted for `φ''`.
pub const MONO2_MAX_CONSTANT: f64 = 100.0;
/// Default probes `c` for the divergence condition on `φ''(c + t)(c − t)²`.
pub const DEFAULT_C_PROBES: [f64; 3] = [0.1, 1.0, 10.0];

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// 600 log-spaced points on `[1e-6, 1e6]`.
pub fn default_t_grid() -> Vec<f64> {
    log_grid(1e-6, 1e6, 600)
}

/// 64 points spread over the function's domain (one point if unbounded).
pub fn default_x_samples(domain: &Domain) -> Vec<Point> {
    domain.sample_points(64)
}

/// Doubles the density of a grid by inserting geometric midpoints.
pub fn refine_grid(grid: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * grid.len());
    for w in grid.windows(2) {
        out.push(w[0]);
        out.push((w[0] * w[1]).sqrt());
    }
    if let Some(&last) = grid.last() {
        out.push(last);
    }
    out
}

/// `max_{i<j} g_i / g_j` on logarithms: the smallest `a` with `g_i <= a g_j`.
fn log_almost_increasing(log_g: &[f64]) -> f64 {
    let mut running = f64::NEG_INFINITY;
    let mut worst = 0.0_f64;
    for &v in log_g {
        if running > v {
            worst = worst.max(running - v);
        }
        running = running.max(v);
    }
    worst
}

fn log_almost_decreasing(log_g: &[f64]) -> f64 {
    let mut running = f64::NEG_INFINITY;
    let mut worst = 0.0_f64;
    for &v in log_g.iter().rev() {
        if running > v {
            worst = worst.max(running - v);
        }
        running = running.max(v);
    }
    worst
}

/// Almost-increasing constant of a positive sequence.
pub fn almost_increasing_constant(g: &[f64]) -> f64 {
    let logs: Vec<f64> = g.iter().map(|v| v.ln()).collect();
    log_almost_increasing(&logs).exp()
}

/// Almost-decreasing constant of a positive sequence.
pub fn almost_decreasing_constant(g: &[f64]) -> f64 {
    let logs: Vec<f64> = g.iter().map(|v| v.ln()).collect();
    log_almost_decreasing(&logs).exp()
}

fn snap_constant(a: f64) -> f64 {
    if a <= 1.0 + EXACT_MONOTONE_SLACK {
        1.0
    } else {
        a
    }
}

fn validate_grid(t_grid: &[f64]) -> bool {
    t_grid.len() >= 2 && t_grid.windows(2).all(|w| w[1] > w[0]) && t_grid[0] > 0.0
}

/// Per-point tables of `(ln t, ln φ(x, t))`, skipping points where `φ` is 0.
fn log_tables(phi: &PhiFunction, x_samples: &[Point], t_grid: &[f64]) -> Vec<Vec<(f64, f64)>> {
    x_samples
        .iter()
        .map(|&x| {
            t_grid
                .iter()
                .filter_map(|&t| {
                    let v = phi.value_at(x, t);
                    (v > 0.0 && v.is_finite()).then(|| (t.ln(), v.ln()))
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Increasing,
    Decreasing,
}

/// Worst almost-monotonicity constant of `t^{-e} φ(x, t)` over all samples.
fn worst_constant(tables: &[Vec<(f64, f64)>], e: f64, dir: Direction) -> f64 {
    let mut buf = Vec::new();
    let mut worst = 0.0_f64;
    for table in tables {
        buf.clear();
        buf.extend(table.iter().map(|(lt, lv)| lv - e * lt));
        let w = match dir {
            Direction::Increasing => log_almost_increasing(&buf),
            Direction::Decreasing => log_almost_decreasing(&buf),
        };
        worst = worst.max(w);
    }
    worst.exp()
}

fn exponent_of(k: usize) -> f64 {
    (1000 + k) as f64 / 1000.0
}

/// Largest `p ∈ (1, 50]` (resolution 1e-3) such that `t^{-p} φ(x, t)` is
/// almost increasing with constant at most 1.01 on every sample.
pub fn estimate_ainc_exponent(
    phi: &PhiFunction,
    x_samples: &[Point],
    t_grid: &[f64],
) -> PropertyReport {
    const NAME: &str = "ainc";
    let samples = x_samples.len() * t_grid.len();
    if !validate_grid(t_grid) || x_samples.is_empty() {
        return PropertyReport::inconclusive(NAME, samples);
    }
    let tables = log_tables(phi, x_samples, t_grid);
    let passes = |k: usize| {
        worst_constant(&tables, exponent_of(k), Direction::Increasing) <= ALMOST_TOLERANCE
    };
    let kmax = ((MAX_EXPONENT - 1.0) * 1000.0).round() as usize;
    if !passes(1) {
        return PropertyReport::inconclusive(NAME, samples);
    }
    let (mut good, mut bad) = (1usize, kmax + 1);
    if passes(kmax) {
        good = kmax;
    } else {
        while bad - good > 1 {
            let mid = (good + bad) / 2;
            if passes(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
    }
    let p = exponent_of(good);
    let a = snap_constant(worst_constant(&tables, p, Direction::Increasing));
    PropertyReport::holds(NAME, &[("exponent", p), ("a", a)], samples)
}

/// Smallest `q ∈ [1, 50]` (resolution 1e-3) such that `t^{-q} φ(x, t)` is
/// almost decreasing with constant at most 1.01 on every sample.
pub fn estimate_adec_exponent(
    phi: &PhiFunction,
    x_samples: &[Point],
    t_grid: &[f64],
) -> PropertyReport {
    const NAME: &str = "adec";
    let samples = x_samples.len() * t_grid.len();
    if !validate_grid(t_grid) || x_samples.is_empty() {
        return PropertyReport::inconclusive(NAME, samples);
    }
    let tables = log_tables(phi, x_samples, t_grid);
    let passes = |k: usize| {
        worst_constant(&tables, exponent_of(k), Direction::Decreasing) <= ALMOST_TOLERANCE
    };
    let kmax = ((MAX_EXPONENT - 1.0) * 1000.0).round() as usize;
    if !passes(kmax) {
        return PropertyReport::inconclusive(NAME, samples);
    }
    let (mut bad, mut good) = (0usize, kmax);
    if passes(0) {
        good = 0;
    } else {
        while good - bad > 1 {
            let mid = (good + bad) / 2;
            if passes(mid) {
                good = mid;
            } else {
                bad = mid;
            }
        }
    }
    let q = exponent_of(good);
    let a = snap_constant(worst_constant(&tables, q, Direction::Decreasing));
    PropertyReport::holds(NAME, &[("exponent", q), ("a", a)], samples)
}

fn delta2_sup(phi: &PhiFunction, x_samples: &[Point], t_grid: &[f64]) -> (f64, Point, f64) {
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0], 0.0);
    for &x in x_samples {
        for &t in t_grid {
            let base = phi.value_at(x, t);
            if base > 0.0 {
                let ratio = phi.value_at(x, 2.0 * t) / base;
                if ratio > best.0 {
                    best = (ratio, x, t);
                }
            }
        }
    }
    best
}

/// Doubling constant `K = sup φ(x, 2t) / φ(x, t)`, accepted when it moves by
/// at most 1% under grid refinement.
pub fn delta2_constant(phi: &PhiFunction, x_samples: &[Point], t_grid: &[f64]) -> PropertyReport {
    const NAME: &str = "delta2";
    let samples = x_samples.len() * t_grid.len();
    if !validate_grid(t_grid) || x_samples.is_empty() {
        return PropertyReport::inconclusive(NAME, samples);
    }
    let (k, _, _) = delta2_sup(phi, x_samples, t_grid);
    let fine = refine_grid(t_grid);
    let (k_fine, x, t) = delta2_sup(phi, x_samples, &fine);
    if !k.is_finite() || !k_fine.is_finite() {
        return PropertyReport::inconclusive(NAME, samples);
    }
    if (k_fine - k).abs() > REFINEMENT_TOLERANCE * k {
        let w = Witness::new(x, 2.0 * t, t, phi.value_at(x, 2.0 * t), k * phi.value_at(x, t));
        return PropertyReport::fails(NAME, vec![w], samples + x_samples.len() * fine.len());
    }
    PropertyReport::holds(NAME, &[("K", k.max(k_fine))], samples)
}

/// `∇₂` holds exactly when `φ` satisfies (aInc) with some exponent above 1.
pub fn nabla2_check(phi: &PhiFunction, x_samples: &[Point], t_grid: &[f64]) -> PropertyReport {
    let mut r = estimate_ainc_exponent(phi, x_samples, t_grid);
    r.property = "nabla2".into();
    if r.is_holds() && !(r.constant("exponent").unwrap_or(0.0) > 1.0) {
        return PropertyReport::inconclusive("nabla2", r.samples);
    }
    r
}

/// Per-point `(C1(x), C2(x))` with `C1 = inf_t tφ''/φ'` and `C2 = sup_t`.
pub fn mono1_per_point(phi: &PhiFunction, x_samples: &[Point], t_grid: &[f64]) -> Vec<(Point, f64, f64)> {
    x_samples
        .iter()
        .map(|&x| {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &t in t_grid {
                let r = t * phi.d2_at(x, t) / phi.d1_at(x, t);
                lo = lo.min(r);
                hi = hi.max(r);
            }
            (x, lo, hi)
        })
        .collect()
}

/// Constants of `C1 φ'(x, t) <= t φ''(x, t) <= C2 φ'(x, t)`.
pub fn mono1_constants(phi: &PhiFunction, x_samples: &[Point], t_grid: &[f64]) -> PropertyReport {
    const NAME: &str = "mono1";
    let samples = x_samples.len() * t_grid.len();
    if !validate_grid(t_grid) || x_samples.is_empty() {
        return PropertyReport::inconclusive(NAME, samples);
    }
    let mut witnesses = Vec::new();
    for &x in x_samples {
        for &t in t_grid {
            let tdd = t * phi.d2_at(x, t);
            let d = phi.d1_at(x, t);
            if !(tdd > 0.0 && d > 0.0 && tdd.is_finite() && d.is_finite()) {
                // positivity of t φ'' fails: -tφ'' < 0 is violated
                witnesses.push(Witness::new(x, 0.0, t, -tdd, 0.0));
            }
        }
    }
    if !witnesses.is_empty() {
        return PropertyReport::fails(NAME, witnesses, samples);
    }
    let bounds = |grid: &[f64]| {
        mono1_per_point(phi, x_samples, grid)
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, a, b)| {
                (lo.min(a), hi.max(b))
            })
    };
    let (c1, c2) = bounds(t_grid);
    let (f1, f2) = bounds(&refine_grid(t_grid));
    let stable = (f1 - c1).abs() <= REFINEMENT_TOLERANCE * c1 && (f2 - c2).abs() <= REFINEMENT_TOLERANCE * c2;
    if !(c1 > 0.0 && c2.is_finite()) || !stable {
        return PropertyReport::inconclusive(NAME, samples);
    }
    PropertyReport::holds(NAME, &[("C1", c1.min(f1)), ("C2", c2.max(f2))], samples)
}

/// Branch of the (Mono2) alternative taken at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mono2Branch {
    /// `φ''` almost increasing with the given constant.
    Increasing(f64),
    /// `φ''` almost decreasing with the given constant, and the tail of
    /// `φ''(c + t)(c − t)²` grows for every probe `c`.
    Decreasing(f64),
    Neither,
}

/// Log-log slope of `φ''(x, c + t)(c − t)²` over the last decade of the grid.
fn tail_slope(phi: &PhiFunction, x: Point, c: f64, t_grid: &[f64]) -> f64 {
    let t_max = *t_grid.last().unwrap();
    let tail: Vec<(f64, f64)> = t_grid
        .iter()
        .filter(|&&t| t >= t_max / 10.0 && t > 2.0 * c)
        .map(|&t| (t.ln(), (phi.d2_at(x, c + t) * (c - t) * (c - t)).ln()))
        .collect();
    fit_slope(&tail)
}

/// Least-squares slope of `(u, v)` pairs; `NaN` with fewer than two points.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let mu = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for &(u, v) in points {
        num += (u - mu) * (v - mv);
        den += (u - mu) * (u - mu);
    }
    num / den
}

pub fn mono2_branch(phi: &PhiFunction, x: Point, t_grid: &[f64], c_probes: &[f64]) -> Mono2Branch {
    let vals: Vec<f64> = t_grid.iter().map(|&t| phi.d2_at(x, t)).collect();
    if vals.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Mono2Branch::Neither;
    }
    let a_inc = snap_constant(almost_increasing_constant(&vals));
    let a_dec = snap_constant(almost_decreasing_constant(&vals));
    if a_inc <= a_dec && a_inc <= MONO2_MAX_CONSTANT {
        return Mono2Branch::Increasing(a_inc);
    }
    if a_dec <= MONO2_MAX_CONSTANT && c_probes.iter().all(|&c| tail_slope(phi, x, c, t_grid) > 0.0) {
        return Mono2Branch::Decreasing(a_dec);
    }
    Mono2Branch::Neither
}

/// Classifies `φ''(x, ·)` at every sample as almost increasing or as almost
/// decreasing with a diverging `φ''(x, c + t)(c − t)²` tail.
pub fn mono2_classify(
    phi: &PhiFunction,
    x_samples: &[Point],
    t_grid: &[f64],
    c_probes: &[f64],
) -> PropertyReport {
    const NAME: &str = "mono2";
    let samples = x_samples.len() * t_grid.len();
    if !validate_grid(t_grid) || x_samples.is_empty() {
        return PropertyReport::inconclusive(NAME, samples);
    }
    let (mut inc, mut dec) = (0usize, 0usize);
    let mut a_max = 1.0_f64;
    let mut witnesses = Vec::new();
    for &x in x_samples {
        match mono2_branch(phi, x, t_grid, c_probes) {
            Mono2Branch::Increasing(a) => {
                inc += 1;
                a_max = a_max.max(a);
            }
            Mono2Branch::Decreasing(a) => {
                dec += 1;
                a_max = a_max.max(a);
            }
            Mono2Branch::Neither => {
                let t = t_grid[0];
                let lo = phi.d2_at(x, t);
                let hi = phi.d2_at(x, *t_grid.last().unwrap());
                witnesses.push(Witness::new(x, 0.0, t, lo, hi));
            }
        }
    }
    if !witnesses.is_empty() {
        return PropertyReport::fails(NAME, witnesses, samples);
    }
    PropertyReport::holds(
        NAME,
        &[
            ("increasing_points", inc as f64),
            ("decreasing_points", dec as f64),
            ("a", a_max),
        ],
        samples,
    )
}

/// Constants of `C1 φ(x, t) <= t φ'(x, t) <= C2 φ(x, t)`.
pub fn derivative_equiv_constants(
    phi: &PhiFunction,
    x_samples: &[Point],
    t_grid: &[f64],
) -> PropertyReport {
    const NAME: &str = "derivative_equivalence";
    let samples = x_samples.len() * t_grid.len();
    if !validate_grid(t_grid) || x_samples.is_empty() {
        return PropertyReport::inconclusive(NAME, samples);
    }
    let (mut c1, mut c2) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut witnesses = Vec::new();
    for &x in x_samples {
        for &t in t_grid {
            let v = phi.value_at(x, t);
            let td = t * phi.d1_at(x, t);
            let r = td / v;
            if !(r > 0.0 && r.is_finite()) {
                witnesses.push(Witness::new(x, 0.0, t, -td, 0.0));
                continue;
            }
            c1 = c1.min(r);
            c2 = c2.max(r);
        }
    }
    if !witnesses.is_empty() {
        return PropertyReport::fails(NAME, witnesses, samples);
    }
    PropertyReport::holds(NAME, &[("C1", c1), ("C2", c2)], samples)
}

/// Seeded `(x, s, t)` tuples: `x` drawn from `x_samples`, `s` and `t`
/// log-uniform on `[1e-3, 1e3]`, with every tenth tuple on the diagonal `s = t`.
pub fn sample_tuples(x_samples: &[Point], count: usize, rng: &mut SeededRng) -> Vec<(Point, f64, f64)> {
    (0..count)
        .map(|i| {
            let x = x_samples[rng.index(x_samples.len())];
            let t = rng.log_uniform(-3.0, 3.0);
            let s = if i % 10 == 0 { t } else { rng.log_uniform(-3.0, 3.0) };
            (x, s, t)
        })
        .collect()
}

/// Young-type inequality `s φ'(x, t) <= φ(x, s) + t φ'(x, t) − φ(x, t)`.
pub fn young_check(phi: &PhiFunction, tuples: &[(Point, f64, f64)]) -> PropertyReport {
    const NAME: &str = "young";
    let witnesses: Vec<Witness> = tuples
        .par_iter()
        .filter_map(|&(x, s, t)| {
            let d = phi.d1_at(x, t);
            let (fs, ft) = (phi.value_at(x, s), phi.value_at(x, t));
            let lhs = s * d;
            let rhs = fs + t * d - ft;
            let scale = lhs.abs().max(fs).max(t * d).max(ft);
            (lhs > rhs + 1e-12 * scale).then(|| Witness::new(x, s, t, lhs, rhs))
        })
        .collect();
    if witnesses.is_empty() {
        PropertyReport::holds(NAME, &[], tuples.len())
    } else {
        PropertyReport::fails(NAME, witnesses, tuples.len())
    }
}

/// Conjugate inequality `φ*(x, φ'(x, t)) <= t φ'(x, t)`.
pub fn conjugate_ineq_check(phi: &PhiFunction, x_samples: &[Point], t_grid: &[f64]) -> PropertyReport {
    const NAME: &str = "conjugate_inequality";
    let pts: Vec<(Point, f64)> = x_samples
        .iter()
        .flat_map(|&x| t_grid.iter().map(move |&t| (x, t)))
        .collect();
    let results: Vec<Option<Option<Witness>>> = pts
        .par_iter()
        .map(|&(x, t)| {
            let s = phi.d1_at(x, t);
            let lhs = phi.conjugate_eval(x, s).ok()?;
            let rhs = t * s;
            Some((lhs > rhs + 1e-9 * rhs.abs()).then(|| Witness::new(x, s, t, lhs, rhs)))
        })
        .collect();
    if results.iter().any(Option::is_none) {
        return PropertyReport::inconclusive(NAME, pts.len());
    }
    let witnesses: Vec<Witness> = results.into_iter().flatten().flatten().collect();
    if witnesses.is_empty() {
        PropertyReport::holds(NAME, &[], pts.len())
    } else {
        PropertyReport::fails(NAME, witnesses, pts.len())
    }
}

/// Sufficient embedding condition `ψ(x, t/K) <= φ(x, t) + c`.
pub fn embedding_witness_check(
    phi: &PhiFunction,
    psi: &PhiFunction,
    k: f64,
    c: f64,
    x_samples: &[Point],
    t_grid: &[f64],
) -> PropertyReport {
    const NAME: &str = "embedding";
    let samples = x_samples.len() * t_grid.len();
    if !(k > 0.0) || !(c >= 0.0) {
        return PropertyReport::inconclusive(NAME, samples);
    }
    let mut witnesses = Vec::new();
    for &x in x_samples {
        for &t in t_grid {
            let lhs = psi.value_at(x, t / k);
            let rhs = phi.value_at(x, t) + c;
            if lhs > rhs + 1e-12 * rhs.abs() {
                witnesses.push(Witness::new(x, t / k, t, lhs, rhs));
            }
        }
    }
    if witnesses.is_empty() {
        PropertyReport::holds(NAME, &[("K", k), ("c", c)], samples)
    } else {
        PropertyReport::fails(NAME, witnesses, samples)
    }
}

/// Runs every checker with default grids and probes.
pub fn full_suite(phi: &PhiFunction, x_samples: &[Point], t_grid: &[f64], rng: &mut SeededRng) -> Vec<PropertyReport> {
    let tuples = sample_tuples(x_samples, 10_000, rng);
    let coarse: Vec<f64> = t_grid.iter().step_by(6).copied().collect();
    vec![
        estimate_ainc_exponent(phi, x_samples, t_grid),
        estimate_adec_exponent(phi, x_samples, t_grid),
        delta2_constant(phi, x_samples, t_grid),
        nabla2_check(phi, x_samples, t_grid),
        mono1_constants(phi, x_samples, t_grid),
        mono2_classify(phi, x_samples, t_grid, &DEFAULT_C_PROBES),
        derivative_equiv_constants(phi, x_samples, t_grid),
        young_check(phi, &tuples),
        conjugate_ineq_check(phi, x_samples, &coarse),
    ]
}
