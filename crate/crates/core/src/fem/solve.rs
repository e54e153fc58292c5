use serde::{Deserialize, Serialize};

use super::energy::PoissonProblem;
use super::mesh::{apply_boundary, Boundary, ScalarField2D, StructuredMesh};
use crate::error::{Error, Result};
use crate::fitloop::{OptimState, Optimizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    /// Gradient descent with step `1/L`, `L` a Gershgorin bound of the
    /// stiffness matrix.
    Gd,
    /// Adam; the step size is halved whenever the energy increases by more
    /// than rounding.
    Adam,
    /// Conjugate gradients on the quadratic energy.
    Cg,
}

impl std::str::FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gd" => Ok(Self::Gd),
            "adam" => Ok(Self::Adam),
            "cg" => Ok(Self::Cg),
            other => Err(Error::Config(format!("unknown solver `{other}` (gd, adam, cg)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: SolveMethod,
    /// Stop once the max-norm of the energy gradient is at most `tol`.
    pub tol: f64,
    pub max_iters: usize,
    /// Initial Adam step size.
    pub learning_rate: f64,
    pub boundary: Boundary,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            method: SolveMethod::Cg,
            tol: 1e-8,
            max_iters: 100_000,
            learning_rate: 1e-2,
            boundary: Boundary::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tolerance must be positive, got {}", self.tol)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// One row of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub iteration: usize,
    pub energy: f64,
    pub grad_max: f64,
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub field: ScalarField2D,
    pub iterations: usize,
    /// Max-norm of the energy gradient at `field`.
    pub grad_norm: f64,
    pub converged: bool,
    pub log: Vec<LogEntry>,
}

/// Energy increases below `ROUNDING_SLACK · ε · |J|` are treated as
/// summation noise rather than overshoot.
const ROUNDING_SLACK: f64 = 256.0;

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes the Galerkin energy over the free nodal coefficients, starting
/// from zero with the boundary values imposed. Fixed nodes are never
/// touched by an update.
pub fn solve_poisson(
    mesh: &StructuredMesh,
    nu: impl Fn(f64, f64) -> f64 + Sync,
    f: impl Fn(f64, f64) -> f64 + Sync,
    cfg: &SolverConfig,
) -> Result<PoissonSolution> {
    cfg.validate()?;
    let problem = PoissonProblem::new(*mesh, nu, f, cfg.boundary)?;
    solve_problem(&problem, cfg)
}

/// [`solve_poisson`] on an already assembled problem.
pub fn solve_problem(problem: &PoissonProblem, cfg: &SolverConfig) -> Result<PoissonSolution> {
    cfg.validate()?;
    let mut field = ScalarField2D::zeros(*problem.mesh());
    apply_boundary(&mut field, problem.boundary());
    let mut log = Vec::new();
    let mut record = |it: usize, field: &ScalarField2D, g: &[f64]| -> Result<f64> {
        let energy = problem.energy(field)?;
        if !energy.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { iteration: it, loss: energy });
        }
        log.push(LogEntry { iteration: it, energy, grad_max: max_norm(g) });
        Ok(energy)
    };

    let mut g = problem.gradient(&field)?;
    let mut energy = record(0, &field, &g)?;
    let mut it = 0;
    match cfg.method {
        SolveMethod::Gd => {
            let step = 1.0 / problem.lipschitz_bound().max(f64::MIN_POSITIVE);
            while max_norm(&g) > cfg.tol && it < cfg.max_iters {
                for (u, gi) in field.coeffs_mut().iter_mut().zip(&g) {
                    *u -= step * gi;
                }
                it += 1;
                g = problem.gradient(&field)?;
                record(it, &field, &g)?;
            }
        }
        SolveMethod::Adam => {
            let rule = Optimizer::default();
            let mut opt = OptimState::new(rule, cfg.learning_rate, g.len());
            while max_norm(&g) > cfg.tol && it < cfg.max_iters {
                opt.update(field.coeffs_mut(), &g);
                it += 1;
                g = problem.gradient(&field)?;
                let next = record(it, &field, &g)?;
                if next - energy > ROUNDING_SLACK * f64::EPSILON * energy.abs() {
                    opt.set_lr(0.5 * opt.lr());
                }
                energy = next;
            }
        }
        SolveMethod::Cg => {
            let mut r: Vec<f64> = g.iter().map(|v| -v).collect();
            let mut p = r.clone();
            let mut rr = dot(&r, &r);
            while max_norm(&r) > cfg.tol && it < cfg.max_iters {
                let mut ap = problem.apply(&p);
                problem.mask_in_place(&mut ap);
                let pap = dot(&p, &ap);
                if !(pap > 0.0) {
                    break;
                }
                let alpha = rr / pap;
                for (u, pi) in field.coeffs_mut().iter_mut().zip(&p) {
                    *u += alpha * pi;
                }
                it += 1;
                // refresh the residual periodically to stop drift
                if it % 50 == 0 {
                    r = problem.gradient(&field)?.iter().map(|v| -v).collect();
                } else {
                    for (ri, api) in r.iter_mut().zip(&ap) {
                        *ri -= alpha * api;
                    }
                }
                let neg: Vec<f64> = r.iter().map(|v| -v).collect();
                record(it, &field, &neg)?;
                let rr_next = dot(&r, &r);
                let beta = rr_next / rr;
                rr = rr_next;
                for (pi, ri) in p.iter_mut().zip(&r) {
                    *pi = ri + beta * *pi;
                }
                if max_norm(&r) <= cfg.tol {
                    r = problem.gradient(&field)?.iter().map(|v| -v).collect();
                    rr = dot(&r, &r);
                    p = r.clone();
                }
            }
            g = problem.gradient(&field)?;
        }
    }
    let grad_norm = max_norm(&g);
    Ok(PoissonSolution { field, iterations: it, grad_norm, converged: grad_norm <= cfg.tol, log })
}
