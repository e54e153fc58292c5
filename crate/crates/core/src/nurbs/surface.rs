use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::basis::basis_raw;
use super::knots::KnotVector;
use crate::error::{Error, Result};
use crate::grid::PointGrid;

/// Tensor-product NURBS surface. Control point `(i, j)` is stored at
/// `i * cols + j`, with `i` running along `u` and `j` along `v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SurfaceJson", into = "SurfaceJson")]
pub struct NurbsSurface {
    rows: usize,
    cols: usize,
    ctrl: Vec<[f64; 3]>,
    weights: Vec<f64>,
    knots_u: KnotVector,
    knots_v: KnotVector,
}

/// On-disk layout of a surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SurfaceJson {
    pub degree_u: usize,
    pub degree_v: usize,
    pub knots_u: Vec<f64>,
    pub knots_v: Vec<f64>,
    pub ctrl: Vec<Vec<[f64; 3]>>,
    pub weights: Vec<Vec<f64>>,
}

impl TryFrom<SurfaceJson> for NurbsSurface {
    type Error = Error;

    fn try_from(s: SurfaceJson) -> Result<Self> {
        let rows = s.ctrl.len();
        let cols = s.ctrl.first().map(Vec::len).unwrap_or(0);
        if s.ctrl.iter().any(|r| r.len() != cols) || s.weights.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged control or weight grid".into()));
        }
        if s.weights.len() != rows {
            return Err(Error::Dimension("weight grid shape differs from control grid".into()));
        }
        NurbsSurface::new(
            rows,
            cols,
            s.ctrl.into_iter().flatten().collect(),
            s.weights.into_iter().flatten().collect(),
            KnotVector::new(s.degree_u, s.knots_u)?,
            KnotVector::new(s.degree_v, s.knots_v)?,
        )
    }
}

impl From<NurbsSurface> for SurfaceJson {
    fn from(s: NurbsSurface) -> Self {
        SurfaceJson {
            degree_u: s.knots_u.degree(),
            degree_v: s.knots_v.degree(),
            knots_u: s.knots_u.knots().to_vec(),
            knots_v: s.knots_v.knots().to_vec(),
            ctrl: s.ctrl.chunks(s.cols).map(<[_]>::to_vec).collect(),
            weights: s.weights.chunks(s.cols).map(<[_]>::to_vec).collect(),
        }
    }
}

impl NurbsSurface {
    pub fn new(
        rows: usize,
        cols: usize,
        ctrl: Vec<[f64; 3]>,
        weights: Vec<f64>,
        knots_u: KnotVector,
        knots_v: KnotVector,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 || ctrl.len() != rows * cols || weights.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "control grid {rows}x{cols} with {} points and {} weights",
                ctrl.len(),
                weights.len()
            )));
        }
        if knots_u.num_ctrl() != rows || knots_v.num_ctrl() != cols {
            return Err(Error::Dimension(format!(
                "knot vectors expect a {}x{} control grid, got {rows}x{cols}",
                knots_u.num_ctrl(),
                knots_v.num_ctrl()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("weights must be positive and finite".into()));
        }
        if ctrl.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Numeric("control points must be finite".into()));
        }
        Ok(Self { rows, cols, ctrl, weights, knots_u, knots_v })
    }

    /// Surface with clamped uniform knots and unit weights.
    pub fn clamped_bspline(
        rows: usize,
        cols: usize,
        degree_u: usize,
        degree_v: usize,
        ctrl: Vec<[f64; 3]>,
    ) -> Result<Self> {
        Self::new(
            rows,
            cols,
            ctrl,
            vec![1.0; rows * cols],
            KnotVector::clamped_uniform(rows, degree_u)?,
            KnotVector::clamped_uniform(cols, degree_v)?,
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn ctrl(&self) -> &[[f64; 3]] {
        &self.ctrl
    }

    pub fn ctrl_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.ctrl
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Replaces the weights; all must stay positive.
    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::Dimension("weight count changed".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("weights must be positive and finite".into()));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn knots_u(&self) -> &KnotVector {
        &self.knots_u
    }

    pub fn knots_v(&self) -> &KnotVector {
        &self.knots_v
    }

    pub fn set_knots(&mut self, knots_u: KnotVector, knots_v: KnotVector) -> Result<()> {
        if knots_u.num_ctrl() != self.rows
            || knots_v.num_ctrl() != self.cols
            || knots_u.degree() != self.knots_u.degree()
            || knots_v.degree() != self.knots_v.degree()
        {
            return Err(Error::Dimension("replacement knots change the surface layout".into()));
        }
        self.knots_u = knots_u;
        self.knots_v = knots_v;
        Ok(())
    }

    pub fn degree_u(&self) -> usize {
        self.knots_u.degree()
    }

    pub fn degree_v(&self) -> usize {
        self.knots_v.degree()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.cols + j
    }

    /// Single-point evaluation.
    pub fn eval(&self, u: f64, v: f64) -> Result<[f64; 3]> {
        let su = AxisSamples::new(&self.knots_u, vec![u])?;
        let sv = AxisSamples::new(&self.knots_v, vec![v])?;
        Ok(self.eval_at(&su, 0, &sv, 0).1)
    }

    fn eval_at(&self, su: &AxisSamples, a: usize, sv: &AxisSamples, b: usize) -> (f64, [f64; 3]) {
        let (i0, j0) = (su.first_ctrl(a), sv.first_ctrl(b));
        let mut acc = [0.0; 4];
        for (di, &nu) in su.basis(a).iter().enumerate() {
            for (dj, &nv) in sv.basis(b).iter().enumerate() {
                let idx = self.index(i0 + di, j0 + dj);
                let w = nu * nv * self.weights[idx];
                let p = self.ctrl[idx];
                acc[0] += w * p[0];
                acc[1] += w * p[1];
                acc[2] += w * p[2];
                acc[3] += w;
            }
        }
        assert!(acc[3] > 0.0, "rational denominator must be positive");
        (acc[3], [acc[0] / acc[3], acc[1] / acc[3], acc[2] / acc[3]])
    }
}

/// Spans and nonzero basis values of one parametric direction at a set of
/// sample parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSamples {
    degree: usize,
    params: Vec<f64>,
    spans: Vec<usize>,
    basis: Vec<f64>,
}

impl AxisSamples {
    pub fn new(knots: &KnotVector, params: Vec<f64>) -> Result<Self> {
        let degree = knots.degree();
        let mut spans = Vec::with_capacity(params.len());
        let mut basis = vec![0.0; params.len() * (degree + 1)];
        for (k, &u) in params.iter().enumerate() {
            let span = knots.find_span(u)?;
            basis_raw(span, u, degree, knots.knots(), &mut basis[k * (degree + 1)..(k + 1) * (degree + 1)]);
            spans.push(span);
        }
        Ok(Self { degree, params, spans, basis })
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn param(&self, k: usize) -> f64 {
        self.params[k]
    }

    pub fn span(&self, k: usize) -> usize {
        self.spans[k]
    }

    pub fn first_ctrl(&self, k: usize) -> usize {
        self.spans[k] - self.degree
    }

    pub fn basis(&self, k: usize) -> &[f64] {
        &self.basis[k * (self.degree + 1)..(k + 1) * (self.degree + 1)]
    }
}

/// Everything the backward pass needs from a grid evaluation. Point
/// `(a, b)` of the `n_grid x m_grid` parameter grid has flat index
/// `a * m_grid + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalCache {
    u: AxisSamples,
    v: AxisSamples,
    denom: Vec<f64>,
    points: Vec<[f64; 3]>,
}

impl EvalCache {
    pub fn n_grid(&self) -> usize {
        self.u.len()
    }

    pub fn m_grid(&self) -> usize {
        self.v.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn u_samples(&self) -> &AxisSamples {
        &self.u
    }

    pub fn v_samples(&self) -> &AxisSamples {
        &self.v
    }

    /// Grid coordinates `(a, b)` of flat index `idx`.
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.m_grid(), idx % self.m_grid())
    }

    pub fn span_u(&self, idx: usize) -> usize {
        self.u.span(self.coords(idx).0)
    }

    pub fn span_v(&self, idx: usize) -> usize {
        self.v.span(self.coords(idx).1)
    }

    pub fn basis_u(&self, idx: usize) -> &[f64] {
        self.u.basis(self.coords(idx).0)
    }

    pub fn basis_v(&self, idx: usize) -> &[f64] {
        self.v.basis(self.coords(idx).1)
    }

    pub fn param(&self, idx: usize) -> (f64, f64) {
        let (a, b) = self.coords(idx);
        (self.u.param(a), self.v.param(b))
    }

    /// `w(u, v) = Σ N_i N_j w_ij`.
    pub fn denom(&self, idx: usize) -> f64 {
        self.denom[idx]
    }

    pub fn point(&self, idx: usize) -> [f64; 3] {
        self.points[idx]
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }
}

/// Evaluates `surface` on the uniform `n_grid x m_grid` grid spanning its
/// closed parametric range. Rows of the grid are evaluated in parallel.
pub fn eval_surface_grid(surface: &NurbsSurface, n_grid: usize, m_grid: usize) -> Result<(PointGrid, EvalCache)> {
    if n_grid < 2 || m_grid < 2 {
        return Err(Error::Config(format!("evaluation grid {n_grid}x{m_grid} must be at least 2x2")));
    }
    let su = AxisSamples::new(surface.knots_u(), surface.knots_u().uniform_params(n_grid))?;
    let sv = AxisSamples::new(surface.knots_v(), surface.knots_v().uniform_params(m_grid))?;
    let rows: Vec<Vec<(f64, [f64; 3])>> =
        (0..n_grid).into_par_iter().map(|a| (0..m_grid).map(|b| surface.eval_at(&su, a, &sv, b)).collect()).collect();
    let (denom, points): (Vec<f64>, Vec<[f64; 3]>) = rows.into_iter().flatten().unzip();
    let grid = PointGrid::new(n_grid, m_grid, points.clone())?;
    Ok((grid, EvalCache { u: su, v: sv, denom, points }))
}
