use rayon::prelude::*;

use super::basis::{gauss_quadrature, lagrange_basis_1d};
use super::mesh::{Boundary, ScalarField2D, StructuredMesh};
use crate::error::{Error, Result};

/// Shape-function tables of the reference element at the tensor Gauss
/// points. Point `q = j * npts + i` sits at `(ξ_i, η_j)`.
#[derive(Debug, Clone)]
struct RefElement {
    npts: usize,
    xi: Vec<f64>,
    weight: Vec<f64>,
    value: Vec<f64>,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl RefElement {
    fn new(mesh: &StructuredMesh, npts: usize) -> Result<Self> {
        let d = mesh.degree();
        let nl = mesh.local_len();
        let (xi, w1) = gauss_quadrature(npts)?;
        let tables: Vec<(Vec<f64>, Vec<f64>)> = xi.iter().map(|&x| lagrange_basis_1d(d, x)).collect();
        let nq = npts * npts;
        let det = 1.0 / (4.0 * (mesh.nx() * mesh.ny()) as f64);
        let (sx, sy) = (2.0 * mesh.nx() as f64, 2.0 * mesh.ny() as f64);
        let mut weight = vec![0.0; nq];
        let mut value = vec![0.0; nq * nl];
        let mut dx = vec![0.0; nq * nl];
        let mut dy = vec![0.0; nq * nl];
        for j in 0..npts {
            for i in 0..npts {
                let q = j * npts + i;
                weight[q] = w1[i] * w1[j] * det;
                let ((vx, dvx), (vy, dvy)) = (&tables[i], &tables[j]);
                for b in 0..=d {
                    for a in 0..=d {
                        let l = b * (d + 1) + a;
                        value[q * nl + l] = vx[a] * vy[b];
                        dx[q * nl + l] = dvx[a] * vy[b] * sx;
                        dy[q * nl + l] = vx[a] * dvy[b] * sy;
                    }
                }
            }
        }
        Ok(Self { npts, xi, weight, value, dx, dy })
    }

    fn len(&self) -> usize {
        self.weight.len()
    }
}

/// The Galerkin energy `J(U) = ½ ∫ ν ∇U·∇U − ∫ f U` of one problem, with ν
/// and f sampled at `(d+1)²` Gauss points per element, the element
/// stiffness matrices and load vectors built from the same samples, and the
/// set of nodes fixed by the boundary conditions.
#[derive(Debug, Clone)]
pub struct PoissonProblem {
    mesh: StructuredMesh,
    boundary: Boundary,
    fixed: Vec<bool>,
    reference: RefElement,
    nu: Vec<f64>,
    f: Vec<f64>,
    stiffness: Vec<f64>,
    element_load: Vec<f64>,
    load: Vec<f64>,
}

impl PoissonProblem {
    pub fn new(
        mesh: StructuredMesh,
        nu: impl Fn(f64, f64) -> f64 + Sync,
        f: impl Fn(f64, f64) -> f64 + Sync,
        boundary: Boundary,
    ) -> Result<Self> {
        let reference = RefElement::new(&mesh, mesh.degree() + 1)?;
        let nq = reference.len();
        let nl = mesh.local_len();
        let ne = mesh.num_elements();
        let mut nu_q = vec![0.0; ne * nq];
        let mut f_q = vec![0.0; ne * nq];
        for e in 0..ne {
            let (ex, ey) = (e % mesh.nx(), e / mesh.nx());
            for q in 0..nq {
                let (i, j) = (q % reference.npts, q / reference.npts);
                let (x, y) = mesh.to_physical(ex, ey, reference.xi[i], reference.xi[j]);
                let (n, s) = (nu(x, y), f(x, y));
                if !n.is_finite() || !s.is_finite() {
                    return Err(Error::Numeric(format!("diffusivity or forcing not finite at ({x}, {y})")));
                }
                nu_q[e * nq + q] = n;
                f_q[e * nq + q] = s;
            }
        }
        let per_element: Vec<(Vec<f64>, Vec<f64>)> = (0..ne)
            .into_par_iter()
            .map(|e| {
                let mut k = vec![0.0; nl * nl];
                let mut r = vec![0.0; nl];
                for q in 0..nq {
                    let w = reference.weight[q];
                    let wn = w * nu_q[e * nq + q];
                    let (gx, gy) = (&reference.dx[q * nl..(q + 1) * nl], &reference.dy[q * nl..(q + 1) * nl]);
                    for l in 0..nl {
                        for m in 0..nl {
                            k[l * nl + m] += wn * (gx[l] * gx[m] + gy[l] * gy[m]);
                        }
                        r[l] += w * f_q[e * nq + q] * reference.value[q * nl + l];
                    }
                }
                (k, r)
            })
            .collect();
        let (stiffness, load): (Vec<Vec<f64>>, Vec<Vec<f64>>) = per_element.into_iter().unzip();
        let mut problem = Self {
            mesh,
            boundary,
            fixed: boundary.mask(&mesh),
            reference,
            nu: nu_q,
            f: f_q,
            stiffness: stiffness.concat(),
            element_load: load.concat(),
            load: Vec::new(),
        };
        problem.load = problem.scatter(|e, out| out.copy_from_slice(&problem.element_load[e * nl..(e + 1) * nl]));
        Ok(problem)
    }

    pub fn mesh(&self) -> &StructuredMesh {
        &self.mesh
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    /// `true` for nodes fixed by a Dirichlet condition.
    pub fn fixed(&self) -> &[bool] {
        &self.fixed
    }

    /// Global load vector `F_j = ∫ f Φ_j`.
    pub fn load(&self) -> &[f64] {
        &self.load
    }

    fn check(&self, field: &ScalarField2D) -> Result<()> {
        if field.mesh() != &self.mesh {
            return Err(Error::Dimension("field belongs to a different mesh".into()));
        }
        Ok(())
    }

    fn gather(&self, ex: usize, ey: usize, x: &[f64], out: &mut [f64]) {
        let d = self.mesh.degree();
        for b in 0..=d {
            for a in 0..=d {
                out[b * (d + 1) + a] = x[self.mesh.element_node(ex, ey, a, b)];
            }
        }
    }

    /// Sums per-element local vectors into a global nodal vector. Every row
    /// of elements fills its own buffer in parallel; buffers are merged in
    /// row order, so the result does not depend on the thread count.
    fn scatter(&self, local: impl Fn(usize, &mut [f64]) + Sync) -> Vec<f64> {
        let (d, nnx) = (self.mesh.degree(), self.mesh.nodes_x());
        let nl = self.mesh.local_len();
        let rows: Vec<Vec<f64>> = (0..self.mesh.ny())
            .into_par_iter()
            .map(|ey| {
                let mut buf = vec![0.0; (d + 1) * nnx];
                let mut out = vec![0.0; nl];
                for ex in 0..self.mesh.nx() {
                    out.iter_mut().for_each(|v| *v = 0.0);
                    local(ey * self.mesh.nx() + ex, &mut out);
                    for b in 0..=d {
                        for a in 0..=d {
                            buf[b * nnx + ex * d + a] += out[b * (d + 1) + a];
                        }
                    }
                }
                buf
            })
            .collect();
        let mut global = vec![0.0; self.mesh.num_nodes()];
        for (ey, buf) in rows.iter().enumerate() {
            let start = ey * d * nnx;
            for (g, v) in global[start..start + buf.len()].iter_mut().zip(buf) {
                *g += v;
            }
        }
        global
    }

    /// Stiffness action `K x` on a nodal vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nl = self.mesh.local_len();
        self.scatter(|e, out| {
            let (ex, ey) = (e % self.mesh.nx(), e / self.mesh.nx());
            let mut xe = vec![0.0; nl];
            self.gather(ex, ey, x, &mut xe);
            let k = &self.stiffness[e * nl * nl..(e + 1) * nl * nl];
            for l in 0..nl {
                out[l] = (0..nl).map(|m| k[l * nl + m] * xe[m]).sum();
            }
        })
    }

    /// `J(U)` by element-wise quadrature.
    pub fn energy(&self, field: &ScalarField2D) -> Result<f64> {
        self.check(field)?;
        let nl = self.mesh.local_len();
        let nq = self.reference.len();
        let r = &self.reference;
        let rows: Vec<f64> = (0..self.mesh.ny())
            .into_par_iter()
            .map(|ey| {
                let mut ue = vec![0.0; nl];
                let mut total = 0.0;
                for ex in 0..self.mesh.nx() {
                    let e = ey * self.mesh.nx() + ex;
                    self.gather(ex, ey, field.coeffs(), &mut ue);
                    for q in 0..nq {
                        let s = q * nl..(q + 1) * nl;
                        let dot = |t: &[f64]| t.iter().zip(&ue).map(|(a, b)| a * b).sum::<f64>();
                        let (u, gx, gy) = (dot(&r.value[s.clone()]), dot(&r.dx[s.clone()]), dot(&r.dy[s]));
                        total +=
                            r.weight[q] * (0.5 * self.nu[e * nq + q] * (gx * gx + gy * gy) - self.f[e * nq + q] * u);
                    }
                }
                total
            })
            .collect();
        Ok(rows.iter().sum())
    }

    /// `∂J/∂U_j = (K U - F)_j` at free nodes and 0 at fixed nodes.
    pub fn gradient(&self, field: &ScalarField2D) -> Result<Vec<f64>> {
        self.check(field)?;
        Ok(self.masked_residual(field.coeffs()))
    }

    pub(crate) fn masked_residual(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.apply(x);
        for ((gi, fi), &fixed) in g.iter_mut().zip(&self.load).zip(&self.fixed) {
            *gi = if fixed { 0.0 } else { *gi - fi };
        }
        g
    }

    pub(crate) fn mask_in_place(&self, v: &mut [f64]) {
        for (vi, &fixed) in v.iter_mut().zip(&self.fixed) {
            if fixed {
                *vi = 0.0;
            }
        }
    }

    /// Gershgorin bound on the largest eigenvalue of the stiffness matrix
    /// restricted to free nodes, from element-level absolute row sums.
    pub fn lipschitz_bound(&self) -> f64 {
        let nl = self.mesh.local_len();
        let sums = self.scatter(|e, out| {
            let k = &self.stiffness[e * nl * nl..(e + 1) * nl * nl];
            for l in 0..nl {
                out[l] = k[l * nl..(l + 1) * nl].iter().map(|v| v.abs()).sum();
            }
        });
        sums.iter().zip(&self.fixed).filter(|(_, &f)| !f).map(|(s, _)| *s).fold(0.0, f64::max)
    }
}

/// `J(U)` for zero Dirichlet data on all sides.
pub fn assemble_energy(
    mesh: &StructuredMesh,
    field: &ScalarField2D,
    nu: impl Fn(f64, f64) -> f64 + Sync,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<f64> {
    PoissonProblem::new(*mesh, nu, f, Boundary::default())?.energy(field)
}

/// Gradient of [`assemble_energy`] over nodal coefficients; boundary
/// entries are 0.
pub fn energy_gradient(
    mesh: &StructuredMesh,
    field: &ScalarField2D,
    nu: impl Fn(f64, f64) -> f64 + Sync,
    f: impl Fn(f64, f64) -> f64 + Sync,
) -> Result<Vec<f64>> {
    PoissonProblem::new(*mesh, nu, f, Boundary::default())?.gradient(field)
}

/// Manufactured pair `u = sin(πx) sin(πy)`, `f = 2π² sin(πx) sin(πy)` with
/// `-Δu = f`.
pub fn exact_solution_and_forcing(x: f64, y: f64) -> (f64, f64) {
    use std::f64::consts::PI;
    let u = (PI * x).sin() * (PI * y).sin();
    (u, 2.0 * PI * PI * u)
}

/// `√(∫ (U - reference)²)` with a 5-point Gauss rule per axis on every
/// element.
pub fn l2_error(field: &ScalarField2D, reference: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    let mesh = *field.mesh();
    let r = RefElement::new(&mesh, 5).expect("5-point rule exists");
    let nl = mesh.local_len();
    let d = mesh.degree();
    let rows: Vec<f64> = (0..mesh.ny())
        .into_par_iter()
        .map(|ey| {
            let mut total = 0.0;
            for ex in 0..mesh.nx() {
                for q in 0..r.len() {
                    let (i, j) = (q % r.npts, q / r.npts);
                    let (x, y) = mesh.to_physical(ex, ey, r.xi[i], r.xi[j]);
                    let mut u = 0.0;
                    for b in 0..=d {
                        for a in 0..=d {
                            u += r.value[q * nl + b * (d + 1) + a] * field.coeffs()[mesh.element_node(ex, ey, a, b)];
                        }
                    }
                    let diff = u - reference(x, y);
                    total += r.weight[q] * diff * diff;
                }
            }
            total
        })
        .collect();
    rows.iter().sum::<f64>().sqrt()
}
