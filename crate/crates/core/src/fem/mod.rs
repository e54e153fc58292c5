//! Differentiable finite elements for the Poisson problem
//! `-∇·(ν∇u) = f` on the unit square.
//!
//! The discrete solution minimizes the Galerkin energy
//! `J(U) = ½ ∫ ν ∇U·∇U − ∫ f U` over the nodal coefficients of a
//! tensor-product Lagrange space, with Dirichlet values imposed exactly by
//! fixing the boundary coefficients.

mod basis;
mod diffusivity;
mod energy;
mod mesh;
mod solve;

pub use basis::{gauss_quadrature, lagrange_basis_1d, lagrange_nodes};
pub use diffusivity::{diffusivity_field, mode_profile, mode_weight, DiffusivityParams, MODE_FREQUENCIES};
pub use energy::{assemble_energy, energy_gradient, exact_solution_and_forcing, l2_error, PoissonProblem};
pub use mesh::{apply_boundary, apply_dirichlet, neumann_pad, Boundary, ScalarField2D, SideCondition, StructuredMesh};
pub use solve::{solve_poisson, solve_problem, LogEntry, PoissonSolution, SolveMethod, SolverConfig};
