//! Differentiable NURBS curves and surfaces.
//!
//! Evaluation follows the usual three steps: locate the knot span, compute
//! the `p+1` nonzero Cox–de Boor basis values, and combine them with the
//! weighted (homogeneous) control points. Surface evaluation on a uniform
//! parametric grid caches spans, basis values and denominators so the
//! backward pass only touches the `(p+1)(q+1)` active control points of
//! every evaluated point.

mod backward;
mod basis;
mod curve;
mod knots;
mod surface;

pub use backward::{
    backward_surface, grad_wrt_ctrl, grad_wrt_knots, grad_wrt_weights, knot_surrogate, ActiveWindow, KnotGradConfig,
    KnotGradMode, NurbsGradients,
};
pub use basis::{basis_funs, basis_funs_du};
pub use curve::NurbsCurve;
pub use knots::KnotVector;
pub use surface::{eval_surface_grid, AxisSamples, EvalCache, NurbsSurface, SurfaceJson};
