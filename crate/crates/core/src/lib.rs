//! Isospectral deformations of a discrete inhomogeneous string.
//!
//! A string is a set of point masses on `(0, 1)` with Robin or Dirichlet
//! ends. The crate computes its spectrum and Weyl function, builds the
//! deformation fields of the isospectral flows, integrates those flows, and
//! solves them exactly through the inverse spectral problem.
//!
//! Spectral and continued-fraction computations are generic over [`Scalar`]
//! and run exactly on [`Rational`]; time stepping runs on `f64`.

pub mod error;
pub mod fields;
pub mod flow;
pub mod inverse;
pub mod liouville;
pub mod piecewise;
pub mod poly;
pub mod scalar;
pub mod string;
pub mod weyl;

pub use error::{Error, Result};
pub use fields::{beta, build_fields, BetaFunction, FieldSet, FlowSpec};
pub use flow::{flow_rhs, integrate, invariants, FlowState, IntegrateError, IntegratorOptions};
pub use inverse::{exact_state, InverseProblem};
pub use piecewise::{PiecewisePoly, Side};
pub use poly::Poly;
pub use scalar::{Rational, Scalar};
pub use string::{char_poly, eigenvalues, Boundary, BoundaryConditions, DiscreteString};
pub use weyl::{cf_expand, partial_fractions, weyl_eval, ContinuedFraction, SpectralData};
