//! Uniform tensor grids, nodal functions and their CSV form.
//!
//! Nodes are numbered row-major with `x` fastest. Cells carry the stencil of
//! the midpoint gradient: the forward difference in 1D, and the bilinear
//! midpoint gradient built from the four corners in 2D.

use std::io::{Read, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{Domain, Point};

/// One cell: corner nodes and the coefficients of `∇u` at its midpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub nodes: [usize; 4],
    pub coef: [[f64; 2]; 4],
    pub len: usize,
    pub mid: Point,
    pub area: f64,
}

impl Cell {
    /// Midpoint gradient of nodal values `u`.
    #[inline]
    pub fn gradient(&self, u: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..self.len {
            let v = u[self.nodes[k]];
            g[0] += self.coef[k][0] * v;
            g[1] += self.coef[k][1] * v;
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    domain: Domain,
    n: usize,
    h: [f64; 2],
    boundary: Vec<bool>,
    weights: Vec<f64>,
    cells: Vec<Cell>,
}

impl Grid {
    /// `n` nodes per axis on `domain` (an interval or a rectangle).
    pub fn new(domain: Domain, n: usize) -> Result<Grid> {
        let mut errs = Vec::new();
        if n < 3 {
            errs.push(format!("grid needs at least 3 nodes per axis (got {n})"));
        }
        if !domain.is_bounded() {
            errs.push("grid domain must be bounded".into());
        }
        if !(domain.x.1 > domain.x.0) || (domain.dim == 2 && !(domain.y.1 > domain.y.0)) {
            errs.push("grid extent must have positive length".into());
        }
        if domain.dim != 1 && domain.dim != 2 {
            errs.push(format!("grid dimension must be 1 or 2 (got {})", domain.dim));
        }
        if !errs.is_empty() {
            return Err(Error::Validation(errs));
        }
        let hx = (domain.x.1 - domain.x.0) / (n - 1) as f64;
        let hy = if domain.dim == 2 {
            (domain.y.1 - domain.y.0) / (n - 1) as f64
        } else {
            0.0
        };
        let trap = |i: usize, h: f64| if i == 0 || i == n - 1 { 0.5 * h } else { h };
        let (boundary, weights, cells) = if domain.dim == 1 {
            let boundary = (0..n).map(|i| i == 0 || i == n - 1).collect();
            let weights = (0..n).map(|i| trap(i, hx)).collect();
            let cells = (0..n - 1)
                .map(|i| Cell {
                    nodes: [i, i + 1, 0, 0],
                    coef: [[-1.0 / hx, 0.0], [1.0 / hx, 0.0], [0.0; 2], [0.0; 2]],
                    len: 2,
                    mid: [domain.x.0 + (i as f64 + 0.5) * hx, 0.0],
                    area: hx,
                })
                .collect();
            (boundary, weights, cells)
        } else {
            let mut boundary = Vec::with_capacity(n * n);
            let mut weights = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    boundary.push(i == 0 || j == 0 || i == n - 1 || j == n - 1);
                    weights.push(trap(i, hx) * trap(j, hy));
                }
            }
            let (ax, ay) = (0.5 / hx, 0.5 / hy);
            let mut cells = Vec::with_capacity((n - 1) * (n - 1));
            for j in 0..n - 1 {
                for i in 0..n - 1 {
                    let k00 = j * n + i;
                    cells.push(Cell {
                        nodes: [k00, k00 + 1, k00 + n, k00 + n + 1],
                        coef: [[-ax, -ay], [ax, -ay], [-ax, ay], [ax, ay]],
                        len: 4,
                        mid: [
                            domain.x.0 + (i as f64 + 0.5) * hx,
                            domain.y.0 + (j as f64 + 0.5) * hy,
                        ],
                        area: hx * hy,
                    });
                }
            }
            (boundary, weights, cells)
        };
        Ok(Grid {
            domain,
            n,
            h: [hx, hy],
            boundary,
            weights,
            cells,
        })
    }

    pub fn interval(a: f64, b: f64, n: usize) -> Result<Grid> {
        Grid::new(Domain::interval(a, b), n)
    }

    pub fn rectangle(a: f64, b: f64, c: f64, d: f64, n: usize) -> Result<Grid> {
        Grid::new(Domain::rectangle(a, b, c, d), n)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.h
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, k: usize) -> Point {
        let d = &self.domain;
        if d.dim == 1 {
            [d.x.0 + k as f64 * self.h[0], 0.0]
        } else {
            let (i, j) = (k % self.n, k / self.n);
            [d.x.0 + i as f64 * self.h[0], d.y.0 + j as f64 * self.h[1]]
        }
    }

    pub fn points(&self) -> Vec<Point> {
        (0..self.len()).map(|k| self.point(k)).collect()
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary[k]
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    /// Trapezoidal (tensor-trapezoidal in 2D) quadrature weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Indices of the non-boundary nodes, in node order.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| !self.boundary[k]).collect()
    }
}

/// Nodal values on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<GridFunction> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(vec![format!("value at node {k} is not finite")]));
        }
        Ok(GridFunction { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> GridFunction {
        let n = grid.len();
        GridFunction {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(Point) -> f64) -> GridFunction {
        let values = grid.points().into_iter().map(f).collect();
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, s: f64) -> GridFunction {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Piecewise linear (bilinear in 2D) interpolant at `p`, clamped to the grid.
    pub fn interpolate(&self, p: Point) -> f64 {
        let g = &self.grid;
        let d = g.domain();
        let n = g.n();
        let locate = |v: f64, lo: f64, h: f64| {
            let s = ((v - lo) / h).clamp(0.0, (n - 1) as f64);
            let i = (s.floor() as usize).min(n - 2);
            (i, s - i as f64)
        };
        let (i, a) = locate(p[0], d.x.0, g.spacing()[0]);
        let u = &self.values;
        if g.dim() == 1 {
            return (1.0 - a) * u[i] + a * u[i + 1];
        }
        let (j, b) = locate(p[1], d.y.0, g.spacing()[1]);
        let k = j * n + i;
        (1.0 - b) * ((1.0 - a) * u[k] + a * u[k + 1]) + b * ((1.0 - a) * u[k + n] + a * u[k + n + 1])
    }

    /// CSV with header `x,value` (1D) or `x,y,value` (2D).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Io(e.to_string());
        if self.grid.dim() == 1 {
            w.write_record(["x", "value"]).map_err(err)?;
        } else {
            w.write_record(["x", "y", "value"]).map_err(err)?;
        }
        for (k, v) in self.values.iter().enumerate() {
            let p = self.grid.point(k);
            let row = if self.grid.dim() == 1 {
                vec![p[0].to_string(), v.to_string()]
            } else {
                vec![p[0].to_string(), p[1].to_string(), v.to_string()]
            };
            w.write_record(&row).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }

    /// Reads values written by [`GridFunction::write_csv`]; coordinates must
    /// match the grid's nodes in order.
    pub fn read_csv<R: Read>(grid: Arc<Grid>, input: R) -> Result<GridFunction> {
        let mut r = csv::Reader::from_reader(input);
        let dim = grid.dim();
        let expected: Vec<&str> = if dim == 1 {
            vec!["x", "value"]
        } else {
            vec!["x", "y", "value"]
        };
        let headers = r.headers().map_err(|e| Error::Io(e.to_string()))?.clone();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::Io(format!("unexpected csv header {headers:?}")));
        }
        let mut values = Vec::with_capacity(grid.len());
        for (k, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| Error::Io(e.to_string()))?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Io(format!("row {}: {e}", k + 1)))?;
            if nums.len() != dim + 1 || k >= grid.len() {
                return Err(Error::Io(format!("row {} does not match the grid", k + 1)));
            }
            let p = grid.point(k);
            let h = grid.spacing()[0];
            if (nums[0] - p[0]).abs() > 1e-9 * (1.0 + h) || (dim == 2 && (nums[1] - p[1]).abs() > 1e-9 * (1.0 + h)) {
                return Err(Error::Io(format!("row {} coordinates do not match node {k}", k + 1)));
            }
            values.push(nums[dim]);
        }
        GridFunction::new(grid, values)
    }
}

/// Pairwise summation; the result does not depend on how callers chunk work.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        v.iter().sum()
    } else {
        let mid = v.len() / 2;
        pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_d_layout() {
        let g = Grid::interval(0.0, 1.0, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g.spacing()[0], 0.25);
        assert_eq!(g.boundary_mask(), &[true, false, false, false, true]);
        assert!((g.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(g.cells().len(), 4);
        assert_eq!(g.interior(), vec![1, 2, 3]);
    }

    #[test]
    fn two_d_layout() {
        let g = Grid::rectangle(0.0, 2.0, 0.0, 1.0, 4).unwrap();
        assert_eq!(g.len(), 16);
        assert_eq!(g.point(5), [2.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(g.boundary_mask().iter().filter(|b| **b).count(), 12);
        assert!((g.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // bilinear gradient is exact on affine functions
        let u: Vec<f64> = g.points().iter().map(|p| 3.0 * p[0] - 2.0 * p[1] + 1.0).collect();
        for c in g.cells() {
            let grad = c.gradient(&u);
            assert!((grad[0] - 3.0).abs() < 1e-12 && (grad[1] + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::interval(0.0, 1.0, 2).is_err());
        assert!(Grid::interval(1.0, 1.0, 5).is_err());
    }

    #[test]
    fn csv_header_and_order() {
        let g = Arc::new(Grid::rectangle(0.0, 1.0, 0.0, 1.0, 3).unwrap());
        let f = GridFunction::from_fn(g.clone(), |p| p[0] + 10.0 * p[1]);
        let text = f.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("x,y,value"));
        assert_eq!(lines.next(), Some("0,0,0"));
        assert_eq!(lines.next(), Some("0.5,0,0.5"));
        let back = GridFunction::read_csv(g, text.as_bytes()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn csv_rejects_mismatched_grid() {
        let g = Arc::new(Grid::interval(0.0, 1.0, 3).unwrap());
        let f = GridFunction::from_fn(g, |p| p[0]);
        let other = Arc::new(Grid::interval(0.0, 2.0, 3).unwrap());
        assert!(GridFunction::read_csv(other, f.to_csv_string().as_bytes()).is_err());
    }

    #[test]
    fn interpolation_reproduces_bilinear() {
        let g = Arc::new(Grid::rectangle(0.0, 1.0, -1.0, 1.0, 5).unwrap());
        let f = |p: Point| 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[1];
        let u = GridFunction::from_fn(g, f);
        for p in [[0.1, 0.3], [0.99, -0.7], [1.0, 1.0], [0.0, -1.0]] {
            assert!((u.interpolate(p) - f(p)).abs() < 1e-12);
        }
    }

    #[test]
    fn pairwise_matches_naive() {
        let v: Vec<f64> = (0..1000).map(|i| i as f64 * 0.5).collect();
        assert_eq!(pairwise_sum(&v), v.iter().sum::<f64>());
    }
}
