//! Numerical lab for parabolic p-Laplace type operator families.
//!
//! Explicit finite-difference solves on uniform grids, sup-norm gaps between
//! nearby operators, log-log rate fits and the predicted exponents they are
//! checked against.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::sync::Arc;

pub mod error;
pub mod evolver;
pub mod exact;
pub mod exec;
pub mod grid;
pub mod harness;
pub mod matrix;
pub mod operator;

pub use error::{Error, Result};
pub use exec::Execution;
pub use grid::{format_f64, sup_diff, sup_norm, Boundary, GridSpec, ScalarField};
pub use matrix::SquareMatrix;

/// Scalar function of position and time.
pub type ScalarFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;
