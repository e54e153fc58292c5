use super::basis::basis_funs;
use super::knots::KnotVector;
use crate::error::{Error, Result};

/// Rational B-spline curve in `dim` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsCurve {
    dim: usize,
    ctrl: Vec<Vec<f64>>,
    weights: Vec<f64>,
    knots: KnotVector,
}

impl NurbsCurve {
    pub fn new(ctrl: Vec<Vec<f64>>, weights: Vec<f64>, knots: KnotVector) -> Result<Self> {
        let dim = ctrl.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || ctrl.iter().any(|p| p.len() != dim) {
            return Err(Error::Dimension("control points must share a nonzero dimension".into()));
        }
        if weights.len() != ctrl.len() {
            return Err(Error::Dimension(format!("{} weights for {} control points", weights.len(), ctrl.len())));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::Config("weights must be positive and finite".into()));
        }
        if knots.num_ctrl() != ctrl.len() {
            return Err(Error::Dimension(format!(
                "{} knots of degree {} need {} control points, got {}",
                knots.len(),
                knots.degree(),
                knots.num_ctrl(),
                ctrl.len()
            )));
        }
        Ok(Self { dim, ctrl, weights, knots })
    }

    /// Non-rational curve: all weights 1.
    pub fn bspline(ctrl: Vec<Vec<f64>>, knots: KnotVector) -> Result<Self> {
        let w = vec![1.0; ctrl.len()];
        Self::new(ctrl, w, knots)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ctrl(&self) -> &[Vec<f64>] {
        &self.ctrl
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    /// First control index of the active window and the rational basis
    /// `R_i = N_i w_i / Σ N_j w_j`, which is also `∂C/∂P_i`.
    pub fn ctrl_factors(&self, u: f64) -> Result<(usize, Vec<f64>)> {
        let span = self.knots.find_span(u)?;
        let first = span - self.knots.degree();
        let mut r = basis_funs(span, u, &self.knots);
        for (k, v) in r.iter_mut().enumerate() {
            *v *= self.weights[first + k];
        }
        let den: f64 = r.iter().sum();
        assert!(den > 0.0, "rational denominator must be positive");
        r.iter_mut().for_each(|v| *v /= den);
        Ok((first, r))
    }

    /// `C(u) = Σ N_i w_i P_i / Σ N_i w_i`.
    pub fn eval(&self, u: f64) -> Result<Vec<f64>> {
        let (first, r) = self.ctrl_factors(u)?;
        let mut out = vec![0.0; self.dim];
        for (k, &rk) in r.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(&self.ctrl[first + k]) {
                *o += rk * p;
            }
        }
        Ok(out)
    }

    /// `Σ N_i P_i`, ignoring the weights.
    pub fn eval_polynomial(&self, u: f64) -> Result<Vec<f64>> {
        let span = self.knots.find_span(u)?;
        let first = span - self.knots.degree();
        let n = basis_funs(span, u, &self.knots);
        let mut out = vec![0.0; self.dim];
        for (k, &nk) in n.iter().enumerate() {
            for (o, p) in out.iter_mut().zip(&self.ctrl[first + k]) {
                *o += nk * p;
            }
        }
        Ok(out)
    }

    /// `∂C/∂w_i = N_i (P_i - C) / Σ N_j w_j` over the active window.
    pub fn weight_grads(&self, u: f64) -> Result<(usize, Vec<Vec<f64>>)> {
        let span = self.knots.find_span(u)?;
        let first = span - self.knots.degree();
        let n = basis_funs(span, u, &self.knots);
        let den: f64 = n.iter().enumerate().map(|(k, v)| v * self.weights[first + k]).sum();
        let c = self.eval(u)?;
        let grads = n
            .iter()
            .enumerate()
            .map(|(k, &nk)| self.ctrl[first + k].iter().zip(&c).map(|(p, ci)| nk * (p - ci) / den).collect())
            .collect();
        Ok((first, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quarter_circle() -> NurbsCurve {
        let kv = KnotVector::new(2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        NurbsCurve::new(vec![vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]], vec![1.0, h, 1.0], kv).unwrap()
    }

    #[test]
    fn linear_midpoint() {
        let kv = KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        let c = NurbsCurve::bspline(vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 0.0]], kv).unwrap();
        assert_eq!(c.eval(0.5).unwrap(), vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn clamped_endpoints_interpolate() {
        let kv = KnotVector::new(3, vec![0.0, 0.0, 0.0, 0.0, 0.3, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let ctrl = vec![vec![0.1, 2.0], vec![1.0, -1.0], vec![3.0, 0.5], vec![-2.0, 4.0], vec![0.7, 0.3]];
        let c = NurbsCurve::new(ctrl.clone(), vec![0.5, 2.0, 1.0, 3.0, 0.8], kv).unwrap();
        assert_eq!(c.eval(0.0).unwrap(), ctrl[0]);
        assert_eq!(c.eval(1.0).unwrap(), ctrl[4]);
    }

    #[test]
    fn quarter_circle_midpoint_and_radius() {
        let c = quarter_circle();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mid = c.eval(0.5).unwrap();
        assert_abs_diff_eq!(mid[0], h, epsilon = 1e-15);
        assert_abs_diff_eq!(mid[1], h, epsilon = 1e-15);
        for i in 0..=50 {
            let p = c.eval(i as f64 / 50.0).unwrap();
            assert!((p[0].hypot(p[1]) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn endpoint_gradients() {
        let c = quarter_circle();
        let (first, r) = c.ctrl_factors(0.0).unwrap();
        assert_eq!(first, 0);
        assert_eq!(r, vec![1.0, 0.0, 0.0]);
        let (_, gw) = c.weight_grads(0.0).unwrap();
        assert!(gw[0].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn weight_grads_match_finite_differences() {
        let c = quarter_circle();
        let u = 0.37;
        let (first, g) = c.weight_grads(u).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let bump = |delta: f64| {
                let mut w = c.weights().to_vec();
                w[first + k] += delta;
                NurbsCurve::new(c.ctrl().to_vec(), w, c.knots().clone()).unwrap().eval(u).unwrap()
            };
            let (p, m) = (bump(h), bump(-h));
            for dim in 0..2 {
                let fd = (p[dim] - m[dim]) / (2.0 * h);
                assert!((fd - g[k][dim]).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        let kv = KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert!(NurbsCurve::new(vec![vec![0.0], vec![1.0]], vec![1.0, 0.0], kv.clone()).is_err());
        assert!(NurbsCurve::new(vec![vec![0.0]], vec![1.0], kv.clone()).is_err());
        assert!(NurbsCurve::new(vec![vec![0.0], vec![1.0, 2.0]], vec![1.0, 1.0], kv).is_err());
    }
}
