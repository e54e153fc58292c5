//! Numerical kernels for differentiable spline approximation.
//!
//! * [`piecewise1d`]: exact k-piecewise polynomial regression and its
//!   block-diagonal weak Jacobian.
//! * [`pcw2d`]: piecewise-constant image layer over connected components.
//! * [`nurbs`]: NURBS curve/surface evaluation with analytic gradients for
//!   control points, weights and knots.
//! * [`fitloop`]: losses, optimizers and the surface fitting driver.
//! * [`fem`]: a differentiable Galerkin energy for the Poisson problem on the
//!   unit square and gradient-based solvers for it.
//! * [`io`]: the text grid, signal and JSON file formats.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod fitloop;
pub mod grid;
pub mod io;
pub mod nurbs;
pub mod pcw2d;
pub mod piecewise1d;

pub use error::{Error, Result};
pub use grid::{Grid, PointGrid};
