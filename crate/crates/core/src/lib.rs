//! Generalized Φ-functions, Musielak–Orlicz modulars and Luxemburg norms,
//! checks of the structural inequalities behind monotone operators of
//! `φ`-Laplacian type, and a convex-energy solver for the discrete Dirichlet
//! problem.
//!
//! ```
//! use orlicz::PhiFunction;
//!
//! let phi = PhiFunction::power(3.0).unwrap();
//! assert_eq!(phi.d1([0.0, 0.0], 2.0).unwrap(), 12.0);
//! ```

// `!(a > b)` comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expr;
pub mod field;
pub mod grid;
pub mod modular;
pub mod mono;
pub mod operator;
pub mod phi;
pub mod props;
pub mod report;
pub mod rng;
pub mod solver;

pub use error::{Error, Result};
pub use field::{Domain, Point, ScalarField};
pub use grid::{Grid, GridFunction};
pub use operator::{DiscreteOperator, Variant};
pub use phi::{Family, FamilyDescriptor, PhiFunction};
pub use report::{PropertyReport, Verdict, Witness};
pub use rng::SeededRng;
pub use solver::{Method, SolveOptions, SolveResult};
