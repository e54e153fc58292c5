use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::PointGrid;

/// Mean squared error over `N` points of dimension `D`:
/// `(1/N) Σ ‖pred - target‖²` and its gradient `(2/N)(pred - target)`.
pub fn mse<const D: usize>(pred: &[[f64; D]], target: &[[f64; D]]) -> Result<(f64, Vec<[f64; D]>)> {
    if pred.len() != target.len() {
        return Err(Error::Dimension(format!("{} predictions vs {} targets", pred.len(), target.len())));
    }
    if pred.is_empty() {
        return Err(Error::Dimension("empty point set".into()));
    }
    let n = pred.len() as f64;
    let mut loss = 0.0;
    let grad = pred
        .iter()
        .zip(target)
        .map(|(p, t)| {
            let mut g = [0.0; D];
            for c in 0..D {
                let r = p[c] - t[c];
                loss += r * r;
                g[c] = 2.0 * r / n;
            }
            g
        })
        .collect();
    Ok((loss / n, grad))
}

/// [`mse`] for evaluated surface grids of equal shape.
pub fn mse_loss(pred: &PointGrid, target: &PointGrid) -> Result<(f64, Vec<[f64; 3]>)> {
    if pred.shape() != target.shape() {
        return Err(Error::Dimension(format!("grid {:?} vs target {:?}", pred.shape(), target.shape())));
    }
    mse(pred.points(), target.points())
}

fn dist2<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    (0..D).map(|c| (a[c] - b[c]) * (a[c] - b[c])).sum()
}

fn one_sided<const D: usize>(from: &[[f64; D]], to: &[[f64; D]], squared: bool) -> f64 {
    let mins: Vec<f64> = from
        .par_iter()
        .map(|p| {
            let m = to.iter().map(|q| dist2(p, q)).fold(f64::INFINITY, f64::min);
            if squared {
                m
            } else {
                m.sqrt()
            }
        })
        .collect();
    mins.iter().sum()
}

/// Two-sided Chamfer distance `Σ_p min_q ‖p-q‖ + Σ_q min_p ‖p-q‖`, with
/// squared norms when `squared` is set.
pub fn chamfer<const D: usize>(p: &[[f64; D]], q: &[[f64; D]], squared: bool) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::Domain("chamfer distance of an empty point set".into()));
    }
    Ok(one_sided(p, q, squared) + one_sided(q, p, squared))
}

/// Unsquared two-sided Chamfer distance.
pub fn chamfer_distance<const D: usize>(p: &[[f64; D]], q: &[[f64; D]]) -> Result<f64> {
    chamfer(p, q, false)
}

/// Chamfer distance scaled by 100, the unit used in result tables.
pub fn chamfer_report<const D: usize>(p: &[[f64; D]], q: &[[f64; D]]) -> Result<f64> {
    Ok(100.0 * chamfer_distance(p, q)?)
}

/// `Σ ‖4P_ij - P_{i-1,j} - P_{i+1,j} - P_{i,j-1} - P_{i,j+1}‖²` over interior
/// control points of a row-major `rows x cols` grid, and its gradient.
pub fn laplacian_regularizer(ctrl: &[[f64; 3]], rows: usize, cols: usize) -> Result<(f64, Vec<[f64; 3]>)> {
    if rows < 3 || cols < 3 {
        return Err(Error::Dimension(format!("laplacian needs a 3x3 grid, got {rows}x{cols}")));
    }
    if ctrl.len() != rows * cols {
        return Err(Error::Dimension(format!("{} points for a {rows}x{cols} grid", ctrl.len())));
    }
    let at = |i: usize, j: usize| i * cols + j;
    let mut loss = 0.0;
    let mut grad = vec![[0.0; 3]; ctrl.len()];
    for i in 1..rows - 1 {
        for j in 1..cols - 1 {
            let nbrs = [at(i - 1, j), at(i + 1, j), at(i, j - 1), at(i, j + 1)];
            for c in 0..3 {
                let r = 4.0 * ctrl[at(i, j)][c] - nbrs.iter().map(|&k| ctrl[k][c]).sum::<f64>();
                loss += r * r;
                grad[at(i, j)][c] += 8.0 * r;
                for &k in &nbrs {
                    grad[k][c] -= 2.0 * r;
                }
            }
        }
    }
    Ok((loss, grad))
}

/// Bukin function N.6 sampled on a uniform `nx x ny` grid over
/// `x ∈ [-15, -5]`, `y ∈ [-3, 3]`; grid row `a` holds `x_a`.
pub fn bukin_target(nx: usize, ny: usize) -> Result<PointGrid> {
    if nx < 2 || ny < 2 {
        return Err(Error::Config(format!("bukin grid {nx}x{ny} must be at least 2x2")));
    }
    let lerp = |lo: f64, hi: f64, k: usize, n: usize| lo + (hi - lo) * (k as f64 / (n - 1) as f64);
    let points = (0..nx * ny)
        .map(|k| {
            let x = lerp(-15.0, -5.0, k / ny, nx);
            let y = lerp(-3.0, 3.0, k % ny, ny);
            [x, y, bukin(x, y)]
        })
        .collect();
    PointGrid::new(nx, ny, points)
}

pub fn bukin(x: f64, y: f64) -> f64 {
    100.0 * (y - 0.01 * (x * x)).abs().sqrt() + 0.01 * (x + 10.0).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        let (l, g) = mse(&[[1.0], [2.0]], &[[1.0], [4.0]]).unwrap();
        assert_eq!(l, 2.0);
        assert_eq!(g, vec![[0.0], [-2.0]]);
        let (l, g) = mse(&[[1.0, 2.0, 3.0]], &[[1.0, 2.0, 3.0]]).unwrap();
        assert_eq!((l, g), (0.0, vec![[0.0; 3]]));
        assert!(matches!(mse(&[[1.0]], &[[1.0], [2.0]]), Err(Error::Dimension(_))));
    }

    #[test]
    fn mse_gradient_matches_finite_differences() {
        let pred = [[0.3, -1.0, 2.0], [1.5, 0.2, -0.7], [0.0, 0.4, 0.9]];
        let target = [[1.0, 0.0, 0.5], [-0.5, 0.7, 0.1], [0.2, 0.2, 0.2]];
        let (_, g) = mse(&pred, &target).unwrap();
        let eps = 1e-6;
        for k in 0..3 {
            for c in 0..3 {
                let (mut lo, mut hi) = (pred, pred);
                lo[k][c] -= eps;
                hi[k][c] += eps;
                let fd = (mse(&hi, &target).unwrap().0 - mse(&lo, &target).unwrap().0) / (2.0 * eps);
                assert!((fd - g[k][c]).abs() / fd.abs().max(1.0) <= 1e-8);
            }
        }
    }

    #[test]
    fn chamfer_examples() {
        let p = [[0.0, 0.0], [1.0, 2.0]];
        assert_eq!(chamfer_distance(&p, &p).unwrap(), 0.0);
        assert_eq!(chamfer_distance(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap(), 10.0);
        assert_eq!(chamfer(&[[0.0, 0.0]], &[[3.0, 4.0]], true).unwrap(), 50.0);
        assert_eq!(chamfer_report(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap(), 1000.0);
        let empty: [[f64; 2]; 0] = [];
        assert!(matches!(chamfer_distance(&empty, &p), Err(Error::Domain(_))));
    }

    proptest! {
        #[test]
        fn chamfer_matches_double_loop_and_is_symmetric(
            p in prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 1..9),
            q in prop::collection::vec(prop::array::uniform3(-5.0f64..5.0), 1..9),
        ) {
            let mut want = 0.0;
            for a in &p {
                let mut best = f64::INFINITY;
                for b in &q {
                    best = best.min(((a[0]-b[0]).powi(2) + (a[1]-b[1]).powi(2) + (a[2]-b[2]).powi(2)).sqrt());
                }
                want += best;
            }
            for b in &q {
                let mut best = f64::INFINITY;
                for a in &p {
                    best = best.min(((a[0]-b[0]).powi(2) + (a[1]-b[1]).powi(2) + (a[2]-b[2]).powi(2)).sqrt());
                }
                want += best;
            }
            let got = chamfer_distance(&p, &q).unwrap();
            prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
            prop_assert_eq!(got, chamfer_distance(&q, &p).unwrap());
        }
    }

    fn flat(rows: usize, cols: usize) -> Vec<[f64; 3]> {
        (0..rows * cols).map(|k| [(k / cols) as f64, (k % cols) as f64, 0.0]).collect()
    }

    #[test]
    fn laplacian_examples() {
        let plane: Vec<[f64; 3]> = (0..20)
            .map(|k| {
                let (i, j) = ((k / 5) as f64, (k % 5) as f64);
                [i, j, 0.5 * i - 2.0 * j + 1.0]
            })
            .collect();
        assert_eq!(laplacian_regularizer(&plane, 4, 5).unwrap().0, 0.0);

        // bump at the center of a 5x5 grid: center residual 4, four neighbours -1
        let mut g = flat(5, 5);
        g[12][2] = 1.0;
        assert_eq!(laplacian_regularizer(&g, 5, 5).unwrap().0, 20.0);
        // on a 3x3 grid only the center stencil exists
        let mut g = flat(3, 3);
        g[4][2] = 1.0;
        assert_eq!(laplacian_regularizer(&g, 3, 3).unwrap().0, 16.0);

        assert!(matches!(laplacian_regularizer(&flat(2, 5), 2, 5), Err(Error::Dimension(_))));
    }

    #[test]
    fn laplacian_gradient_matches_finite_differences() {
        let ctrl: Vec<[f64; 3]> = (0..20)
            .map(|k| {
                let x = k as f64;
                [x.sin(), (0.7 * x).cos(), 0.1 * x * x]
            })
            .collect();
        let (_, g) = laplacian_regularizer(&ctrl, 4, 5).unwrap();
        let eps = 1e-6;
        for k in 0..20 {
            for c in 0..3 {
                let (mut lo, mut hi) = (ctrl.clone(), ctrl.clone());
                lo[k][c] -= eps;
                hi[k][c] += eps;
                let fd = (laplacian_regularizer(&hi, 4, 5).unwrap().0 - laplacian_regularizer(&lo, 4, 5).unwrap().0)
                    / (2.0 * eps);
                assert!((fd - g[k][c]).abs() / fd.abs().max(g[k][c].abs()).max(1.0) <= 1e-7);
            }
        }
    }

    #[test]
    fn bukin_examples() {
        assert_eq!(bukin(-10.0, 1.0), 0.0);
        assert!((bukin(-5.0, -3.0) - 180.32756377319947).abs() < 1e-10);
        let t = bukin_target(4, 3).unwrap();
        assert_eq!(t.shape(), (4, 3));
        assert_eq!(t.get(0, 0)[..2], [-15.0, -3.0]);
        assert_eq!(t.get(3, 2)[..2], [-5.0, 3.0]);
        assert_eq!(t.get(3, 0)[2], bukin(-5.0, -3.0));
    }
}
