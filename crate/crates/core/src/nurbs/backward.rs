use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::surface::{AxisSamples, EvalCache, NurbsSurface};
use crate::error::{Error, Result};

/// Values on the `(p+1) x (q+1)` block of control points starting at
/// `(first_u, first_v)`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveWindow<T> {
    pub first_u: usize,
    pub first_v: usize,
    pub width: usize,
    pub values: Vec<T>,
}

impl<T: Copy> ActiveWindow<T> {
    /// `(i, j, value)` in global control-grid coordinates.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.first_u + k / self.width, self.first_v + k % self.width, v))
    }
}

/// How gradients with respect to knot positions are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KnotGradMode {
    /// Basis value times knot value at slots `span..=span+d`.
    #[default]
    Literal,
    /// Basis value times `(u - u_knot) / σ²` at slots `span..=span+d`.
    Gaussian,
    /// Derivative of the Cox–de Boor recursion with respect to the `2d`
    /// knots `span-d+1..=span+d` that shape the active basis functions.
    Exact,
}

impl std::str::FromStr for KnotGradMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Self::Literal),
            "gaussian" => Ok(Self::Gaussian),
            "exact" => Ok(Self::Exact),
            other => Err(Error::Config(format!("unknown knot gradient mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnotGradConfig {
    pub mode: KnotGradMode,
    pub sigma: f64,
}

impl Default for KnotGradConfig {
    fn default() -> Self {
        Self { mode: KnotGradMode::Literal, sigma: 1e-2 }
    }
}

impl KnotGradConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Config(format!("sigma must be positive, got {}", self.sigma)));
        }
        Ok(())
    }
}

/// Gradients of a scalar loss with respect to every surface parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct NurbsGradients {
    pub d_ctrl: Vec<[f64; 3]>,
    pub d_weights: Vec<f64>,
    pub d_knots_u: Vec<f64>,
    pub d_knots_v: Vec<f64>,
}

/// Rational basis factors `∂S/∂P_ij` at evaluated point `idx`.
pub fn grad_wrt_ctrl(surface: &NurbsSurface, cache: &EvalCache, idx: usize) -> ActiveWindow<f64> {
    let (nu, nv) = (cache.basis_u(idx), cache.basis_v(idx));
    let (i0, j0) = window_origin(surface, cache, idx);
    let den = cache.denom(idx);
    let values = nu
        .iter()
        .enumerate()
        .flat_map(|(h, &a)| {
            nv.iter().enumerate().map(move |(l, &b)| a * b * surface.weights()[surface.index(i0 + h, j0 + l)] / den)
        })
        .collect();
    ActiveWindow { first_u: i0, first_v: j0, width: nv.len(), values }
}

/// `∂S/∂w_ij = N_i N_j (P_ij - S) / w(u, v)` at evaluated point `idx`.
pub fn grad_wrt_weights(surface: &NurbsSurface, cache: &EvalCache, idx: usize) -> ActiveWindow<[f64; 3]> {
    let (nu, nv) = (cache.basis_u(idx), cache.basis_v(idx));
    let (i0, j0) = window_origin(surface, cache, idx);
    let den = cache.denom(idx);
    let s = cache.point(idx);
    let values = nu
        .iter()
        .enumerate()
        .flat_map(|(h, &a)| {
            nv.iter().enumerate().map(move |(l, &b)| {
                let p = surface.ctrl()[surface.index(i0 + h, j0 + l)];
                let f = a * b / den;
                [f * (p[0] - s[0]), f * (p[1] - s[1]), f * (p[2] - s[2])]
            })
        })
        .collect();
    ActiveWindow { first_u: i0, first_v: j0, width: nv.len(), values }
}

fn window_origin(surface: &NurbsSurface, cache: &EvalCache, idx: usize) -> (usize, usize) {
    (cache.span_u(idx) - surface.degree_u(), cache.span_v(idx) - surface.degree_v())
}

/// Surrogate knot contributions of one parameter value. `basis` holds the
/// `d+1` active basis values, `knot_values` the knots at slots
/// `span..=span+d`, and `scale` the upstream sensitivity of each basis
/// function. Returns one contribution per slot.
pub fn knot_surrogate(
    cfg: &KnotGradConfig,
    u: f64,
    basis: &[f64],
    knot_values: &[f64],
    scale: &[f64],
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if basis.len() != knot_values.len() || basis.len() != scale.len() {
        return Err(Error::Dimension("surrogate inputs differ in length".into()));
    }
    let inv_var = 1.0 / (cfg.sigma * cfg.sigma);
    Ok(basis
        .iter()
        .zip(knot_values)
        .zip(scale)
        .map(|((&n, &k), &s)| match cfg.mode {
            KnotGradMode::Literal => n * k * s,
            KnotGradMode::Gaussian => (u - k) * inv_var * n * s,
            KnotGradMode::Exact => f64::NAN,
        })
        .collect())
}

/// Derivatives of the `d+1` active basis values with respect to the `2d`
/// knots `span-d+1..=span+d`, laid out as `[h * 2d + k]`. Degenerate
/// quotients (0/0) contribute nothing, as in the forward recursion.
pub(crate) fn basis_knot_derivs(span: usize, u: f64, degree: usize, knots: &[f64]) -> Vec<f64> {
    let d = degree;
    let m = 2 * d;
    if d == 0 {
        return Vec::new();
    }
    let mut n = vec![0.0; d + 1];
    let mut dn = vec![0.0; (d + 1) * m];
    let mut left = vec![0.0; d + 1];
    let mut right = vec![0.0; d + 1];
    n[0] = 1.0;
    for j in 1..=d {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        // local index of knot span+1-j is d-j, of knot span+j is d-1+j
        let mut saved = 0.0;
        let mut dsaved = vec![0.0; m];
        for r in 0..j {
            let den = right[r + 1] + left[j - r];
            let mut next_dn = vec![0.0; m];
            let (temp, dtemp) = if den == 0.0 {
                (0.0, vec![0.0; m])
            } else {
                let temp = n[r] / den;
                let mut dden = vec![0.0; m];
                dden[d + r] += 1.0;
                dden[d - (j - r)] -= 1.0;
                let dtemp: Vec<f64> = (0..m).map(|k| (dn[r * m + k] - temp * dden[k]) / den).collect();
                (temp, dtemp)
            };
            for k in 0..m {
                let dright = if k == d + r { 1.0 } else { 0.0 };
                next_dn[k] = dsaved[k] + dright * temp + right[r + 1] * dtemp[k];
            }
            let new_saved = left[j - r] * temp;
            for k in 0..m {
                let dleft = if k == d - (j - r) { -1.0 } else { 0.0 };
                dsaved[k] = dleft * temp + left[j - r] * dtemp[k];
            }
            n[r] = saved + right[r + 1] * temp;
            dn[r * m..(r + 1) * m].copy_from_slice(&next_dn);
            saved = new_saved;
        }
        n[j] = saved;
        dn[j * m..(j + 1) * m].copy_from_slice(&dsaved);
    }
    dn
}

/// Applies the configured knot kernel to one axis. `scales[k]` holds the
/// accumulated sensitivities of the `d+1` basis functions at sample `k`.
fn axis_knot_grad(samples: &AxisSamples, knots: &[f64], scales: &[Vec<f64>], cfg: &KnotGradConfig) -> Result<Vec<f64>> {
    let d = samples.degree();
    let mut grad = vec![0.0; knots.len()];
    for (k, scale) in scales.iter().enumerate() {
        let span = samples.span(k);
        let u = samples.param(k);
        match cfg.mode {
            KnotGradMode::Exact => {
                let dn = basis_knot_derivs(span, u, d, knots);
                let m = 2 * d;
                for (h, &s) in scale.iter().enumerate() {
                    for slot in 0..m {
                        grad[span + 1 - d + slot] += s * dn[h * m + slot];
                    }
                }
            }
            _ => {
                let contrib = knot_surrogate(cfg, u, samples.basis(k), &knots[span..=span + d], scale)?;
                for (h, c) in contrib.into_iter().enumerate() {
                    grad[span + h] += c;
                }
            }
        }
    }
    Ok(grad)
}

/// Per-point sensitivities of the loss to each active basis function in
/// each direction: `s_h = <g, Σ_l N_l w (P - S)> / w(u, v)` and likewise for
/// `v`.
fn basis_sensitivities(
    surface: &NurbsSurface,
    cache: &EvalCache,
    idx: usize,
    g: [f64; 3],
    su: &mut [f64],
    sv: &mut [f64],
) {
    let (nu, nv) = (cache.basis_u(idx), cache.basis_v(idx));
    let (i0, j0) = window_origin(surface, cache, idx);
    let den = cache.denom(idx);
    let s = cache.point(idx);
    for (h, &a) in nu.iter().enumerate() {
        for (l, &b) in nv.iter().enumerate() {
            let k = surface.index(i0 + h, j0 + l);
            let p = surface.ctrl()[k];
            let w = surface.weights()[k] / den;
            let dot = w * (g[0] * (p[0] - s[0]) + g[1] * (p[1] - s[1]) + g[2] * (p[2] - s[2]));
            su[h] += b * dot;
            sv[l] += a * dot;
        }
    }
}

fn check_upstream(cache: &EvalCache, upstream: &[[f64; 3]]) -> Result<()> {
    if upstream.len() != cache.len() {
        return Err(Error::Dimension(format!(
            "upstream has {} points, evaluation grid has {}",
            upstream.len(),
            cache.len()
        )));
    }
    Ok(())
}

/// Knot gradients along `u` and `v` for upstream point gradients.
pub fn grad_wrt_knots(
    surface: &NurbsSurface,
    cache: &EvalCache,
    upstream: &[[f64; 3]],
    cfg: &KnotGradConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = backward_surface(surface, cache, upstream, cfg)?;
    Ok((g.d_knots_u, g.d_knots_v))
}

struct RowPartial {
    d_ctrl: Vec<[f64; 3]>,
    d_weights: Vec<f64>,
    su: Vec<f64>,
    sv: Vec<Vec<f64>>,
}

/// Accumulates the vector-Jacobian product of every evaluated point. Each
/// row of the evaluation grid produces its own partial sums, merged in row
/// order so the result does not depend on the thread count.
pub fn backward_surface(
    surface: &NurbsSurface,
    cache: &EvalCache,
    upstream: &[[f64; 3]],
    cfg: &KnotGradConfig,
) -> Result<NurbsGradients> {
    cfg.validate()?;
    check_upstream(cache, upstream)?;
    let (p, q) = (surface.degree_u(), surface.degree_v());
    let (n_grid, m_grid) = (cache.n_grid(), cache.m_grid());
    let nctrl = surface.rows() * surface.cols();

    let partials: Vec<RowPartial> = (0..n_grid)
        .into_par_iter()
        .map(|a| {
            let mut part = RowPartial {
                d_ctrl: vec![[0.0; 3]; nctrl],
                d_weights: vec![0.0; nctrl],
                su: vec![0.0; p + 1],
                sv: vec![vec![0.0; q + 1]; m_grid],
            };
            for b in 0..m_grid {
                let idx = a * m_grid + b;
                let g = upstream[idx];
                if g == [0.0; 3] {
                    continue;
                }
                for (i, j, r) in grad_wrt_ctrl(surface, cache, idx).iter() {
                    let c = &mut part.d_ctrl[surface.index(i, j)];
                    c[0] += r * g[0];
                    c[1] += r * g[1];
                    c[2] += r * g[2];
                }
                for (i, j, dw) in grad_wrt_weights(surface, cache, idx).iter() {
                    part.d_weights[surface.index(i, j)] += g[0] * dw[0] + g[1] * dw[1] + g[2] * dw[2];
                }
                basis_sensitivities(surface, cache, idx, g, &mut part.su, &mut part.sv[b]);
            }
            part
        })
        .collect();

    let mut d_ctrl = vec![[0.0; 3]; nctrl];
    let mut d_weights = vec![0.0; nctrl];
    let mut su = Vec::with_capacity(n_grid);
    let mut sv = vec![vec![0.0; q + 1]; m_grid];
    for part in partials {
        for (acc, c) in d_ctrl.iter_mut().zip(&part.d_ctrl) {
            acc[0] += c[0];
            acc[1] += c[1];
            acc[2] += c[2];
        }
        for (acc, w) in d_weights.iter_mut().zip(&part.d_weights) {
            *acc += w;
        }
        for (acc, s) in sv.iter_mut().zip(&part.sv) {
            for (x, y) in acc.iter_mut().zip(s) {
                *x += y;
            }
        }
        su.push(part.su);
    }
    let d_knots_u = axis_knot_grad(cache.u_samples(), surface.knots_u().knots(), &su, cfg)?;
    let d_knots_v = axis_knot_grad(cache.v_samples(), surface.knots_v().knots(), &sv, cfg)?;
    Ok(NurbsGradients { d_ctrl, d_weights, d_knots_u, d_knots_v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nurbs::{basis_funs, eval_surface_grid, KnotVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_surface(rng: &mut ChaCha8Rng, rows: usize, cols: usize, p: usize, q: usize) -> NurbsSurface {
        let ctrl = (0..rows * cols)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let mut s = NurbsSurface::clamped_bspline(rows, cols, p, q, ctrl).unwrap();
        s.set_weights((0..rows * cols).map(|_| rng.gen_range(0.5..2.0)).collect()).unwrap();
        s
    }

    fn bilinear() -> NurbsSurface {
        NurbsSurface::clamped_bspline(
            2,
            2,
            1,
            1,
            vec![[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 1.0]],
        )
        .unwrap()
    }

    #[test]
    fn bilinear_factors_are_quarter() {
        let s = bilinear();
        let (_, cache) = eval_surface_grid(&s, 3, 3).unwrap();
        let win = grad_wrt_ctrl(&s, &cache, 4);
        assert_eq!(win.values, vec![0.25; 4]);
    }

    #[test]
    fn factors_sum_to_one_with_equal_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = random_surface(&mut rng, 5, 6, 3, 2);
        s.set_weights(vec![2.5; 30]).unwrap();
        let (_, cache) = eval_surface_grid(&s, 9, 7).unwrap();
        for idx in 0..cache.len() {
            let sum: f64 = grad_wrt_ctrl(&s, &cache, idx).values.iter().sum();
            assert!((sum - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn equal_control_points_have_zero_weight_gradient() {
        let mut s = NurbsSurface::clamped_bspline(4, 4, 3, 3, vec![[0.3, -2.0, 5.0]; 16]).unwrap();
        s.set_weights((0..16).map(|k| 1.0 + k as f64).collect()).unwrap();
        let (_, cache) = eval_surface_grid(&s, 5, 5).unwrap();
        for idx in 0..cache.len() {
            for (_, _, g) in grad_wrt_weights(&s, &cache, idx).iter() {
                assert!(g.iter().all(|v| v.abs() <= 1e-14));
            }
        }
    }

    #[test]
    fn corner_point_depends_only_on_corner_control() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_surface(&mut rng, 4, 4, 3, 3);
        let (_, cache) = eval_surface_grid(&s, 4, 4).unwrap();
        let win = grad_wrt_ctrl(&s, &cache, 0);
        for (i, j, r) in win.iter() {
            assert_eq!(r, if (i, j) == (0, 0) { 1.0 } else { 0.0 });
        }
        for (_, _, g) in grad_wrt_weights(&s, &cache, 0).iter() {
            assert_eq!(g, [0.0; 3]);
        }
    }

    #[test]
    fn surrogate_example() {
        let cfg = KnotGradConfig::default();
        let out = knot_surrogate(&cfg, 0.4, &[0.5, 0.5], &[0.2, 0.6], &[1.0, 1.0]).unwrap();
        assert!((out[0] - 0.1).abs() < 1e-15 && (out[1] - 0.3).abs() < 1e-15);
        let g = KnotGradConfig { mode: KnotGradMode::Gaussian, sigma: 0.5 };
        let out = knot_surrogate(&g, 0.4, &[0.5, 0.5], &[0.2, 0.6], &[1.0, 1.0]).unwrap();
        assert!((out[0] - 0.4).abs() < 1e-15 && (out[1] + 0.4).abs() < 1e-15);
        let bad = KnotGradConfig { sigma: 0.0, ..cfg };
        assert!(matches!(knot_surrogate(&bad, 0.4, &[1.0], &[0.0], &[1.0]), Err(Error::Config(_))));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_surface(&mut rng, 5, 5, 3, 3);
        let (_, cache) = eval_surface_grid(&s, 6, 6).unwrap();
        for mode in [KnotGradMode::Literal, KnotGradMode::Gaussian, KnotGradMode::Exact] {
            let g = backward_surface(&s, &cache, &vec![[0.0; 3]; 36], &KnotGradConfig { mode, sigma: 1e-2 }).unwrap();
            assert!(g.d_ctrl.iter().flatten().all(|&v| v == 0.0));
            assert!(g.d_weights.iter().chain(&g.d_knots_u).chain(&g.d_knots_v).all(|&v| v == 0.0));
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let s = bilinear();
        let (_, cache) = eval_surface_grid(&s, 3, 3).unwrap();
        let err = backward_surface(&s, &cache, &[[0.0; 3]; 4], &KnotGradConfig::default());
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn single_point_gradient_is_factor_times_upstream() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = random_surface(&mut rng, 4, 5, 2, 3);
        let (_, cache) = eval_surface_grid(&s, 5, 4).unwrap();
        let mut up = vec![[0.0; 3]; cache.len()];
        up[7] = [0.3, -1.2, 2.0];
        let g = backward_surface(&s, &cache, &up, &KnotGradConfig::default()).unwrap();
        let win = grad_wrt_ctrl(&s, &cache, 7);
        let mut touched = 0;
        for (i, j, r) in win.iter() {
            let k = s.index(i, j);
            assert_eq!(g.d_ctrl[k], up[7].map(|u| r * u));
            if r != 0.0 {
                touched += 1;
            }
        }
        assert_eq!(g.d_ctrl.iter().filter(|c| **c != [0.0; 3]).count(), touched);
    }

    #[test]
    fn knot_gradient_is_local() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_surface(&mut rng, 8, 8, 3, 3);
        let (_, cache) = eval_surface_grid(&s, 11, 13).unwrap();
        for mode in [KnotGradMode::Literal, KnotGradMode::Gaussian] {
            for idx in 0..cache.len() {
                let mut up = vec![[0.0; 3]; cache.len()];
                up[idx] = [1.0, -0.5, 0.25];
                let g = backward_surface(&s, &cache, &up, &KnotGradConfig { mode, sigma: 1e-2 }).unwrap();
                let nz = g.d_knots_u.iter().chain(&g.d_knots_v).filter(|v| **v != 0.0).count();
                assert!(nz <= 8);
                assert!(g.d_ctrl.iter().filter(|c| **c != [0.0; 3]).count() <= 16);
            }
        }
    }

    #[test]
    fn exact_knot_derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let d = rng.gen_range(1..=4);
            let n_ctrl = d + 1 + rng.gen_range(1..5);
            let mut interior: Vec<f64> = (0..n_ctrl - d - 1).map(|_| rng.gen_range(0.05..0.95)).collect();
            interior.sort_by(f64::total_cmp);
            let mut knots = vec![0.0; d + 1];
            knots.extend(&interior);
            knots.extend(vec![1.0; d + 1]);
            let kv = KnotVector::new(d, knots.clone()).unwrap();
            let u = rng.gen_range(0.0..1.0);
            let span = kv.find_span(u).unwrap();
            let dn = basis_knot_derivs(span, u, d, &knots);
            let m = 2 * d;
            for slot in 0..m {
                let kidx = span + 1 - d + slot;
                if !kv.interior_range().contains(&kidx) {
                    continue;
                }
                let eps = 1e-7;
                let mut lo_k = knots.clone();
                let mut hi_k = knots.clone();
                lo_k[kidx] -= eps;
                hi_k[kidx] += eps;
                // stay within the span so the forward map is smooth
                if hi_k[kidx] > knots[kidx + 1] || lo_k[kidx] < knots[kidx - 1] {
                    continue;
                }
                if (u - knots[kidx]).abs() < 1e-6 {
                    continue;
                }
                let lo = basis_funs(span, u, &KnotVector::new(d, lo_k).unwrap());
                let hi = basis_funs(span, u, &KnotVector::new(d, hi_k).unwrap());
                for h in 0..=d {
                    let fd = (hi[h] - lo[h]) / (2.0 * eps);
                    let an = dn[h * m + slot];
                    assert!((fd - an).abs() <= 1e-5 * (1.0 + an.abs()), "d={d} h={h} slot={slot}: {an} vs {fd}");
                }
            }
        }
    }

    fn loss(s: &NurbsSurface, target: &[[f64; 3]], n: usize) -> f64 {
        let (grid, _) = eval_surface_grid(s, n, n).unwrap();
        0.5 * grid
            .points()
            .iter()
            .zip(target)
            .map(|(a, b)| (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>())
            .sum::<f64>()
    }

    #[test]
    fn loss_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 16;
        let s = random_surface(&mut rng, 5, 5, 3, 3);
        let target: Vec<[f64; 3]> = (0..n * n)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        let (grid, cache) = eval_surface_grid(&s, n, n).unwrap();
        let up: Vec<[f64; 3]> =
            grid.points().iter().zip(&target).map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]]).collect();
        let g = backward_surface(&s, &cache, &up, &KnotGradConfig { mode: KnotGradMode::Exact, sigma: 1e-2 }).unwrap();
        let eps = 1e-6;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        for k in 0..25 {
            for c in 0..3 {
                let (mut lo, mut hi) = (s.clone(), s.clone());
                lo.ctrl_mut()[k][c] -= eps;
                hi.ctrl_mut()[k][c] += eps;
                let fd = (loss(&hi, &target, n) - loss(&lo, &target, n)) / (2.0 * eps);
                assert!(rel(g.d_ctrl[k][c], fd) <= 1e-5);
            }
            let mut wl = s.weights().to_vec();
            let mut wh = wl.clone();
            wl[k] -= eps;
            wh[k] += eps;
            let (mut lo, mut hi) = (s.clone(), s.clone());
            lo.set_weights(wl).unwrap();
            hi.set_weights(wh).unwrap();
            let fd = (loss(&hi, &target, n) - loss(&lo, &target, n)) / (2.0 * eps);
            assert!(rel(g.d_weights[k], fd) <= 1e-5);
        }
        // interior knot of the u direction
        let kidx = 4;
        let mut ku = s.knots_u().knots().to_vec();
        ku[kidx] += eps;
        let mut hi = s.clone();
        hi.set_knots(KnotVector::new(3, ku.clone()).unwrap(), s.knots_v().clone()).unwrap();
        ku[kidx] -= 2.0 * eps;
        let mut lo = s.clone();
        lo.set_knots(KnotVector::new(3, ku).unwrap(), s.knots_v().clone()).unwrap();
        let fd = (loss(&hi, &target, n) - loss(&lo, &target, n)) / (2.0 * eps);
        assert!(rel(g.d_knots_u[kidx], fd) <= 1e-4, "{} vs {fd}", g.d_knots_u[kidx]);
    }
}
