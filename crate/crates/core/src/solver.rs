//! Dirichlet solves by minimizing the discrete convex energy.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Point;
use crate::grid::{GridFunction, Grid};
use crate::operator::{DiscreteOperator, Variant};
use crate::phi::{Family, PhiFunction};
use crate::report::Verdict;

/// Curvature floor: cells with `|∇u| < ε` get their Hessian at `|∇u| = ε`.
/// The residual never sees it.
pub const CURVATURE_FLOOR: f64 = 1e-10;
pub const ARMIJO_C: f64 = 1e-4;
pub const MAX_DESCENT_ITERATIONS: usize = 100_000;
pub const MAX_NEWTON_ITERATIONS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Descent,
    Newton,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub tol: f64,
    pub method: Method,
    /// Defaults to 10^5 for descent and 200 for Newton.
    pub max_iterations: Option<usize>,
    /// Starting state; zero when absent. Boundary values are ignored for `A`.
    pub initial: Option<Vec<f64>>,
}

impl SolveOptions {
    pub fn new(tol: f64, method: Method) -> SolveOptions {
        SolveOptions {
            tol,
            method,
            max_iterations: None,
            initial: None,
        }
    }

    /// Newton at the default tolerance for `phi`.
    pub fn for_phi(phi: &PhiFunction) -> SolveOptions {
        SolveOptions::new(default_tolerance(phi), Method::Newton)
    }
}

/// 1e-10 for quadratic energies, 1e-8 otherwise.
pub fn default_tolerance(phi: &PhiFunction) -> f64 {
    let x: Point = [0.0, 0.0];
    let quadratic = phi.family() == Family::Power && phi.d2_at(x, 0.5) == phi.d2_at(x, 2.0);
    if quadratic {
        1e-10
    } else {
        1e-8
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: GridFunction,
    pub iterations: usize,
    pub residual_inf: f64,
    pub energy_history: Vec<f64>,
    pub method: Method,
}

#[derive(Serialize)]
struct SolveMetadata<'a> {
    method: Method,
    iterations: usize,
    residual_inf: f64,
    energy_history: &'a [f64],
}

impl SolveResult {
    /// Iteration count, final residual and energy history as JSON.
    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&SolveMetadata {
            method: self.method,
            iterations: self.iterations,
            residual_inf: self.residual_inf,
            energy_history: &self.energy_history,
        })
        .expect("metadata serializes")
    }
}

/// Lower triangle of a symmetric banded matrix, row `i` holding columns
/// `i − bw ..= i`.
struct Banded {
    n: usize,
    bw: usize,
    a: Vec<f64>,
}

impl Banded {
    fn zeros(n: usize, bw: usize) -> Banded {
        Banded {
            n,
            bw,
            a: vec![0.0; n * (bw + 1)],
        }
    }

    #[inline]
    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(j <= i && i - j <= self.bw);
        &mut self.a[i * (self.bw + 1) + self.bw + j - i]
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.bw + 1) + self.bw + j - i]
    }

    /// In-place Cholesky; `false` if a pivot is not positive.
    fn factor(&mut self) -> bool {
        let bw = self.bw;
        for i in 0..self.n {
            let start = i.saturating_sub(bw);
            for j in start..=i {
                let mut sum = self.get(i, j);
                for k in start.max(j.saturating_sub(bw))..j {
                    sum -= self.get(i, k) * self.get(j, k);
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return false;
                    }
                    *self.at(i, i) = sum.sqrt();
                } else {
                    *self.at(i, j) = sum / self.get(j, j);
                }
            }
        }
        true
    }

    fn solve(&self, b: &mut [f64]) {
        let bw = self.bw;
        for i in 0..self.n {
            let lo = i.saturating_sub(bw);
            let s: f64 = (lo..i).zip(&b[lo..i]).map(|(k, bk)| self.get(i, k) * bk).sum();
            b[i] = (b[i] - s) / self.get(i, i);
        }
        for i in (0..self.n).rev() {
            let hi = (i + bw + 1).min(self.n);
            let s: f64 = (i + 1..hi).zip(&b[i + 1..hi]).map(|(k, bk)| self.get(k, i) * bk).sum();
            b[i] = (b[i] - s) / self.get(i, i);
        }
    }
}

/// Hessian of the energy restricted to the unknowns, with the curvature floor.
fn hessian(op: &DiscreteOperator, u: &[f64], index: &[Option<usize>], count: usize) -> Banded {
    let grid = op.grid();
    // interior numbering: the bilinear stencil reaches one row up and one node over
    let bw = if grid.dim() == 1 { 1 } else { grid.n() - 1 };
    let mut h = Banded::zeros(count, bw);
    let phi = op.phi();
    for c in grid.cells() {
        let g = c.gradient(u);
        let m = g[0].hypot(g[1]);
        let me = m.max(CURVATURE_FLOOR);
        let dir = if m > 0.0 { [g[0] / m, g[1] / m] } else { [1.0, 0.0] };
        let across = phi.d1_at(c.mid, me) / me;
        // the secant slope φ'/t is the larger curvature wherever φ' grows
        // sublinearly; plain Newton overshoots there and the iteration cycles
        let along = phi.d2_at(c.mid, me).max(across);
        let hm = [
            [
                across + (along - across) * dir[0] * dir[0],
                (along - across) * dir[0] * dir[1],
            ],
            [
                (along - across) * dir[0] * dir[1],
                across + (along - across) * dir[1] * dir[1],
            ],
        ];
        for a in 0..c.len {
            let Some(ia) = index[c.nodes[a]] else { continue };
            let ca = c.coef[a];
            let ha = [
                hm[0][0] * ca[0] + hm[0][1] * ca[1],
                hm[1][0] * ca[0] + hm[1][1] * ca[1],
            ];
            for b in 0..c.len {
                let Some(ib) = index[c.nodes[b]] else { continue };
                if ib > ia {
                    continue;
                }
                let cb = c.coef[b];
                *h.at(ia, ib) += c.area * (ha[0] * cb[0] + ha[1] * cb[1]);
            }
        }
    }
    h
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimizes the discrete energy of `op` (variant `A`) with load `f` until
/// the residual sup-norm over interior nodes drops to `opts.tol`.
pub fn solve_dirichlet(op: &DiscreteOperator, f: &GridFunction, opts: &SolveOptions) -> Result<SolveResult> {
    let grid = op.grid();
    if f.values().len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            got: f.values().len(),
        });
    }
    if op.variant() != Variant::A {
        return Err(Error::Validation(vec![
            "the Dirichlet solver needs the gradient-only variant A".into(),
        ]));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Validation(vec![format!("tolerance must be positive (got {})", opts.tol)]));
    }
    let f = f.values();
    let unknowns = op.unknowns();
    let mut index = vec![None; grid.len()];
    for (i, &k) in unknowns.iter().enumerate() {
        index[k] = Some(i);
    }
    let mut u = match &opts.initial {
        Some(v) if v.len() == grid.len() => v.clone(),
        Some(v) => {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: v.len(),
            })
        }
        None => vec![0.0; grid.len()],
    };
    for (k, v) in u.iter_mut().enumerate() {
        if index[k].is_none() {
            *v = 0.0;
        }
    }
    let max_iter = opts.max_iterations.unwrap_or(match opts.method {
        Method::Descent => MAX_DESCENT_ITERATIONS,
        Method::Newton => MAX_NEWTON_ITERATIONS,
    });
    let mut energy = op.energy_values(&u, f);
    let mut history = vec![energy];
    let mut step_guess: f64 = 1.0;
    for iteration in 0..=max_iter {
        let r = op.residual_values(&u, f);
        let ru: Vec<f64> = unknowns.iter().map(|&k| r[k]).collect();
        let rinf = sup_norm(&ru);
        if rinf <= opts.tol {
            return Ok(SolveResult {
                u: GridFunction::new(grid.clone(), u)?,
                iterations: iteration,
                residual_inf: rinf,
                energy_history: history,
                method: opts.method,
            });
        }
        if iteration == max_iter {
            break;
        }
        let mut d: Vec<f64> = ru.iter().map(|x| -x).collect();
        let mut alpha = 1.0;
        if opts.method == Method::Newton {
            let mut h = hessian(op, &u, &index, unknowns.len());
            if h.factor() {
                h.solve(&mut d);
            } else {
                d = ru.iter().map(|x| -x).collect();
            }
            let slope: f64 = d.iter().zip(&ru).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                d = ru.iter().map(|x| -x).collect();
            }
        } else {
            alpha = (2.0 * step_guess).min(1e12);
        }
        let slope: f64 = d.iter().zip(&ru).map(|(a, b)| a * b).sum();
        // rounding slack keeps Armijo satisfiable once energy changes sit at the ulp level
        let slack = 4.0 * f64::EPSILON * energy.abs().max(f64::MIN_POSITIVE);
        let mut trial = u.clone();
        let accepted = loop {
            for (i, &k) in unknowns.iter().enumerate() {
                trial[k] = u[k] + alpha * d[i];
            }
            let e = op.energy_values(&trial, f);
            if e <= energy + ARMIJO_C * alpha * slope + slack {
                break Some(e);
            }
            alpha *= 0.5;
            if alpha < 1e-40 {
                break None;
            }
        };
        let accepted = match accepted {
            // a full Newton step that still lowers the energy is stretched while
            // that keeps paying off; this matters where φ'' is singular at 0
            Some(mut e) if opts.method == Method::Newton && alpha == 1.0 => {
                let mut longer = trial.clone();
                for _ in 0..60 {
                    let next = 2.0 * alpha;
                    for (i, &k) in unknowns.iter().enumerate() {
                        longer[k] = u[k] + next * d[i];
                    }
                    let en = op.energy_values(&longer, f);
                    if !(en < e) {
                        break;
                    }
                    alpha = next;
                    e = en;
                    std::mem::swap(&mut trial, &mut longer);
                }
                Some(e)
            }
            other => other,
        };
        match accepted {
            Some(e) => {
                energy = e;
                history.push(e);
                std::mem::swap(&mut u, &mut trial);
                step_guess = alpha;
            }
            None => {
                return Err(Error::LineSearchFailure {
                    iteration,
                    residual: rinf,
                })
            }
        }
    }
    Err(Error::MaxIterations(max_iter))
}

/// Solve-by-solve data of a refinement sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub ns: Vec<usize>,
    pub energies: Vec<f64>,
    pub iterations: Vec<usize>,
    /// Sup over the coarser grid's nodes of the difference to the next finer solution.
    pub differences: Vec<f64>,
    /// `differences[k] / differences[k + 1]`.
    pub ratios: Vec<f64>,
    pub energies_monotone: bool,
    pub differences_shrink: bool,
    pub verdict: Verdict,
}

/// Differences below this are treated as converged.
pub const REFINEMENT_FLOOR: f64 = 1e-9;
pub const REFINEMENT_MIN_RATIO: f64 = 1.5;

/// Solves on each `n` in turn and compares successive solutions at the
/// coarser grid's nodes (the finer solution interpolated).
pub fn refinement_study<M, L>(make: M, load: L, ns: &[usize], opts: &SolveOptions) -> Result<RefinementReport>
where
    M: Fn(usize) -> Result<DiscreteOperator>,
    L: Fn(Point) -> f64,
{
    let mut solutions = Vec::with_capacity(ns.len());
    let mut energies = Vec::with_capacity(ns.len());
    let mut iterations = Vec::with_capacity(ns.len());
    for &n in ns {
        let op = make(n)?;
        let f = GridFunction::from_fn(op.grid().clone(), &load);
        let res = solve_dirichlet(&op, &f, opts)?;
        energies.push(*res.energy_history.last().expect("history is never empty"));
        iterations.push(res.iterations);
        solutions.push(res.u);
    }
    let differences: Vec<f64> = solutions
        .windows(2)
        .map(|w| {
            let coarse = &w[0];
            let g: &Grid = coarse.grid();
            (0..g.len())
                .map(|k| (coarse.values()[k] - w[1].interpolate(g.point(k))).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let ratios: Vec<f64> = differences.windows(2).map(|w| w[0] / w[1]).collect();
    let steps: Vec<f64> = energies.windows(2).map(|w| w[1] - w[0]).collect();
    let tiny = 1e-12 * energies.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    let energies_monotone = steps.iter().all(|s| *s <= tiny) || steps.iter().all(|s| *s >= -tiny);
    let differences_shrink = differences
        .windows(2)
        .all(|w| w[1] <= REFINEMENT_FLOOR || w[0] >= REFINEMENT_MIN_RATIO * w[1]);
    let verdict = if energies_monotone && differences_shrink {
        Verdict::Holds
    } else {
        Verdict::Fails
    };
    Ok(RefinementReport {
        ns: ns.to_vec(),
        energies,
        iterations,
        differences,
        ratios,
        energies_monotone,
        differences_shrink,
        verdict,
    })
}
