use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// First-order update rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Optimizer {
    PlainGd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

impl Optimizer {
    pub fn validate(&self) -> Result<()> {
        if let Optimizer::Adam { beta1, beta2, eps } = *self {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || !(eps > 0.0) {
                return Err(Error::Config(format!("invalid adam parameters ({beta1}, {beta2}, {eps})")));
            }
        }
        Ok(())
    }
}

/// Optimizer state for one flat parameter block.
#[derive(Debug, Clone)]
pub struct OptimState {
    rule: Optimizer,
    lr: f64,
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl OptimState {
    pub fn new(rule: Optimizer, lr: f64, len: usize) -> Self {
        Self { rule, lr, step: 0, m: vec![0.0; len], v: vec![0.0; len] }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.lr = lr;
    }

    /// Applies one update `params -= step(grad)` in place.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.step += 1;
        match self.rule {
            Optimizer::PlainGd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            Optimizer::Adam { beta1, beta2, eps } => {
                let c1 = 1.0 - beta1.powi(self.step);
                let c2 = 1.0 - beta2.powi(self.step);
                for k in 0..params.len() {
                    self.m[k] = beta1 * self.m[k] + (1.0 - beta1) * grad[k];
                    self.v[k] = beta2 * self.v[k] + (1.0 - beta2) * grad[k] * grad[k];
                    let mhat = self.m[k] / c1;
                    let vhat = self.v[k] / c2;
                    params[k] -= self.lr * mhat / (vhat.sqrt() + eps);
                }
            }
        }
    }
}

/// Restores a valid interior knot sequence between fixed ends `lo < hi`:
/// clamp into the open range, sort, then push neighbours closer than
/// `margin` apart symmetrically (a knot next to an end moves alone). If the
/// symmetric pushes do not settle, a forward and a backward sweep place the
/// knots at exactly the required spacing.
pub fn project_knots(interior: &mut [f64], lo: f64, hi: f64, margin: f64) -> Result<()> {
    if !(margin >= 0.0) {
        return Err(Error::Config(format!("knot margin must be non-negative, got {margin}")));
    }
    if interior.is_empty() {
        return Ok(());
    }
    // a hair above the margin so rounding never leaves a gap below it
    let gap = margin * (1.0 + 1e-9);
    let n = interior.len();
    if (n + 1) as f64 * gap >= hi - lo {
        return Err(Error::Config(format!("{n} interior knots do not fit in ({lo}, {hi}) with margin {margin}")));
    }
    if let Some(k) = interior.iter().position(|k| !k.is_finite()) {
        return Err(Error::Numeric(format!("interior knot {k} is not finite")));
    }
    for k in interior.iter_mut() {
        *k = k.clamp(lo + gap, hi - gap);
    }
    interior.sort_by(f64::total_cmp);
    let ok = |x: &[f64]| x.windows(2).all(|w| w[1] - w[0] >= margin) && x[0] - lo >= margin && hi - x[n - 1] >= margin;
    for _ in 0..64 {
        if ok(interior) {
            return Ok(());
        }
        if interior[0] - lo < gap {
            interior[0] = lo + gap;
        }
        if hi - interior[n - 1] < gap {
            interior[n - 1] = hi - gap;
        }
        for i in 0..n - 1 {
            let d = interior[i + 1] - interior[i];
            if d < gap {
                let push = 0.5 * (gap - d);
                interior[i] -= push;
                interior[i + 1] += push;
            }
        }
        interior.sort_by(f64::total_cmp);
    }
    if ok(interior) {
        return Ok(());
    }
    let mut prev = lo;
    for k in interior.iter_mut() {
        *k = k.max(prev + gap);
        prev = *k;
    }
    let mut next = hi;
    for k in interior.iter_mut().rev() {
        *k = k.min(next - gap);
        next = *k;
    }
    debug_assert!(ok(interior));
    Ok(())
}

/// Largest relative error `|a - fd| / max(1, |a|, |fd|)` between an analytic
/// gradient and central differences of `f` at `params`.
pub fn gradient_check<F>(mut f: F, analytic: &[f64], params: &[f64], step: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if !(step > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {step}")));
    }
    if analytic.len() != params.len() {
        return Err(Error::Dimension(format!("{} gradient entries for {} parameters", analytic.len(), params.len())));
    }
    let mut x = params.to_vec();
    let mut worst: f64 = 0.0;
    for k in 0..x.len() {
        let orig = x[k];
        x[k] = orig + step;
        let hi = f(&x)?;
        x[k] = orig - step;
        let lo = f(&x)?;
        x[k] = orig;
        let fd = (hi - lo) / (2.0 * step);
        let a = analytic[k];
        if !fd.is_finite() || !a.is_finite() {
            return Err(Error::Numeric(format!("non-finite gradient at coordinate {k}")));
        }
        worst = worst.max((a - fd).abs() / 1f64.max(a.abs()).max(fd.abs()));
    }
    Ok(worst)
}
