//! Gradient-based surface fitting: losses, optimizers, knot projection and
//! the fitting driver.

mod losses;
mod optim;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PointGrid;
use crate::nurbs::{backward_surface, eval_surface_grid, KnotGradConfig, KnotGradMode, KnotVector, NurbsSurface};

pub use losses::{
    bukin, bukin_target, chamfer, chamfer_distance, chamfer_report, laplacian_regularizer, mse, mse_loss,
};
pub use optim::{gradient_check, project_knots, OptimState, Optimizer};

/// Fitting hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    /// Step size for control points.
    pub learning_rate: f64,
    /// Step size for interior knots.
    pub knot_learning_rate: f64,
    pub iterations: usize,
    pub optimizer: Optimizer,
    pub reparameterize_knots: bool,
    /// Knot gradient used when reparameterizing.
    pub knot_grad: KnotGradMode,
    /// Bandwidth of the Gaussian knot surrogate.
    pub sigma: f64,
    pub knot_margin: f64,
    /// Weight of the control-grid Laplacian penalty; 0 disables it.
    pub laplacian_weight: f64,
    /// Fit in coordinates where the target's bounding box is centered and
    /// its largest extent is 1.
    pub normalize: bool,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            knot_learning_rate: 1e-3,
            iterations: 2000,
            optimizer: Optimizer::default(),
            reparameterize_knots: false,
            knot_grad: KnotGradMode::Exact,
            sigma: 1e-2,
            knot_margin: 1e-4,
            laplacian_weight: 0.0,
            normalize: true,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.reparameterize_knots && !(self.knot_learning_rate > 0.0) {
            return Err(Error::Config(format!("knot learning rate must be positive, got {}", self.knot_learning_rate)));
        }
        if !(self.knot_margin >= 0.0) {
            return Err(Error::Config(format!("knot margin must be non-negative, got {}", self.knot_margin)));
        }
        if !(self.laplacian_weight >= 0.0) {
            return Err(Error::Config("laplacian weight must be non-negative".into()));
        }
        self.knot_grad_config().validate()?;
        self.optimizer.validate()
    }

    pub fn knot_grad_config(&self) -> KnotGradConfig {
        KnotGradConfig { mode: self.knot_grad, sigma: self.sigma }
    }
}

/// Outcome of [`fit_surface`]. The wall-clock time is kept out of the JSON
/// form so reports of identical runs are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub surface: NurbsSurface,
    /// Loss before every update plus the final loss (`iterations + 1`
    /// entries), in the units of the target.
    pub loss_history: Vec<f64>,
    pub final_mse: f64,
    #[serde(skip)]
    pub seconds: f64,
}

/// JSON form of a [`FitReport`] with the history thinned to every `k`-th
/// iteration (the last entry is always kept).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub final_mse: f64,
    pub iterations: usize,
    pub history: Vec<(usize, f64)>,
    pub surface: NurbsSurface,
}

impl FitReport {
    pub fn summary(&self, every: usize) -> FitSummary {
        let every = every.max(1);
        let last = self.loss_history.len() - 1;
        let history = self
            .loss_history
            .iter()
            .enumerate()
            .filter(|(k, _)| k % every == 0 || *k == last)
            .map(|(k, &l)| (k, l))
            .collect();
        FitSummary { final_mse: self.final_mse, iterations: last, history, surface: self.surface.clone() }
    }
}

/// Affine map into fitting coordinates, `x' = (x - center) * scale`.
#[derive(Debug, Clone, Copy)]
struct Frame {
    center: [f64; 3],
    scale: f64,
}

impl Frame {
    fn identity() -> Self {
        Self { center: [0.0; 3], scale: 1.0 }
    }

    fn of(target: &PointGrid) -> Self {
        let (lo, hi) = target.bounding_box();
        let extent = (0..3).map(|c| hi[c] - lo[c]).fold(0.0, f64::max);
        let center = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1]), 0.5 * (lo[2] + hi[2])];
        Self { center, scale: if extent > 0.0 { 1.0 / extent } else { 1.0 } }
    }

    fn to_local(self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|c| (p[c] - self.center[c]) * self.scale)
    }

    fn to_global(self, p: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|c| p[c] / self.scale + self.center[c])
    }
}

/// Clamped uniform surface of the given degrees whose control points are
/// drawn uniformly from the bounding box of `target`.
pub fn random_init(target: &PointGrid, rows: usize, cols: usize, degree: usize, seed: u64) -> Result<NurbsSurface> {
    let (lo, hi) = target.bounding_box();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ctrl = (0..rows * cols)
        .map(|_| [0, 1, 2].map(|c| if hi[c] > lo[c] { rng.gen_range(lo[c]..=hi[c]) } else { lo[c] }))
        .collect();
    NurbsSurface::clamped_bspline(rows, cols, degree, degree, ctrl)
}

fn flatten(points: &[[f64; 3]]) -> Vec<f64> {
    points.iter().flatten().copied().collect()
}

/// Fits `init` to `target` by gradient descent on the mean squared error
/// between the surface evaluated on the target's grid resolution and the
/// target points, plus the optional Laplacian penalty. Control points are
/// always updated; interior knots as well when `reparameterize_knots` is
/// set, followed by [`project_knots`].
pub fn fit_surface(target: &PointGrid, init: &NurbsSurface, cfg: &FitConfig) -> Result<FitReport> {
    cfg.validate()?;
    if let Some(k) = target.points().iter().position(|p| !p.iter().all(|v| v.is_finite())) {
        return Err(Error::Numeric(format!("target point {k} is not finite")));
    }
    let start = Instant::now();
    let frame = if cfg.normalize { Frame::of(target) } else { Frame::identity() };
    let loss_unit = 1.0 / (frame.scale * frame.scale);
    let local_target =
        PointGrid::new(target.rows(), target.cols(), target.points().iter().map(|&p| frame.to_local(p)).collect())?;

    let mut surface = init.clone();
    for p in surface.ctrl_mut() {
        *p = frame.to_local(*p);
    }
    let (n_grid, m_grid) = target.shape();
    let (rows, cols) = (surface.rows(), surface.cols());
    let use_lap = cfg.laplacian_weight > 0.0;
    let kcfg = cfg.knot_grad_config();

    let mut ctrl_opt = OptimState::new(cfg.optimizer, cfg.learning_rate, rows * cols * 3);
    let ru = surface.knots_u().interior_range();
    let rv = surface.knots_v().interior_range();
    let mut knot_opt = OptimState::new(cfg.optimizer, cfg.knot_learning_rate, ru.len() + rv.len());

    let mut history = Vec::with_capacity(cfg.iterations + 1);
    let mut final_mse = f64::NAN;
    for it in 0..=cfg.iterations {
        let (pred, cache) = eval_surface_grid(&surface, n_grid, m_grid)?;
        let (mse_val, upstream) = mse_loss(&pred, &local_target)?;
        let mut loss = mse_val;
        let lap = if use_lap {
            let (l, g) = laplacian_regularizer(surface.ctrl(), rows, cols)?;
            loss += cfg.laplacian_weight * l;
            Some(g)
        } else {
            None
        };
        if !loss.is_finite() {
            return Err(Error::Divergence { iteration: it, loss });
        }
        history.push(loss * loss_unit);
        final_mse = mse_val * loss_unit;
        if it == cfg.iterations {
            break;
        }

        let grads = backward_surface(&surface, &cache, &upstream, &kcfg)?;
        let mut g_ctrl = flatten(&grads.d_ctrl);
        if let Some(lg) = lap {
            for (g, l) in g_ctrl.iter_mut().zip(flatten(&lg)) {
                *g += cfg.laplacian_weight * l;
            }
        }
        let mut params = flatten(surface.ctrl());
        ctrl_opt.update(&mut params, &g_ctrl);
        for (p, chunk) in surface.ctrl_mut().iter_mut().zip(params.chunks(3)) {
            *p = [chunk[0], chunk[1], chunk[2]];
        }

        if cfg.reparameterize_knots {
            let mut ku = surface.knots_u().knots().to_vec();
            let mut kv = surface.knots_v().knots().to_vec();
            let mut params: Vec<f64> = ku[ru.clone()].iter().chain(&kv[rv.clone()]).copied().collect();
            let grad: Vec<f64> =
                grads.d_knots_u[ru.clone()].iter().chain(&grads.d_knots_v[rv.clone()]).copied().collect();
            knot_opt.update(&mut params, &grad);
            let (iu, iv) = params.split_at_mut(ru.len());
            let (ulo, uhi) = surface.knots_u().domain();
            let (vlo, vhi) = surface.knots_v().domain();
            project_knots(iu, ulo, uhi, cfg.knot_margin)?;
            project_knots(iv, vlo, vhi, cfg.knot_margin)?;
            ku[ru.clone()].copy_from_slice(iu);
            kv[rv.clone()].copy_from_slice(iv);
            surface.set_knots(KnotVector::new(surface.degree_u(), ku)?, KnotVector::new(surface.degree_v(), kv)?)?;
        }
    }

    for p in surface.ctrl_mut() {
        *p = frame.to_global(*p);
    }
    Ok(FitReport { surface, loss_history: history, final_mse, seconds: start.elapsed().as_secs_f64() })
}
