//! Fixtures shared by the criterion benches in `benches/`.

use std::sync::Arc;

use orlicz::modular::random_grid_function;
use orlicz::{Domain, Grid, GridFunction, PhiFunction, ScalarField, SeededRng};

/// The variable-exponent double phase `t^{1.5+0.5x} + x t^3` on (0, 1).
pub fn double_phase() -> PhiFunction {
    let d = Domain::unit_interval();
    let p = ScalarField::parse("1.5 + 0.5*x", &d).expect("valid expression");
    let mu = ScalarField::parse("x", &d).expect("valid expression");
    PhiFunction::double_phase(p, 3.0.into(), mu, false, d).expect("valid family")
}

pub fn interval(n: usize) -> Arc<Grid> {
    Arc::new(Grid::interval(0.0, 1.0, n).expect("valid grid"))
}

pub fn square(n: usize) -> Arc<Grid> {
    Arc::new(Grid::rectangle(0.0, 1.0, 0.0, 1.0, n).expect("valid grid"))
}

/// A seeded sample function, zero on the boundary when `dirichlet` is set.
pub fn sample(grid: &Arc<Grid>, dirichlet: bool) -> GridFunction {
    random_grid_function(grid, &mut SeededRng::new(17), dirichlet)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_build() {
        assert_eq!(sample(&interval(9), true).values()[0], 0.0);
        assert_eq!(square(5).len(), 25);
        assert!(double_phase().value_at([0.5, 0.0], 1.0) > 1.0);
    }
}
