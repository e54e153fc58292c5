//! Finite-difference gradient suites behind `dsa gradcheck`.

use std::fmt::Write as _;

use dsa_core::fem::{
    apply_dirichlet, exact_solution_and_forcing, Boundary, PoissonProblem, ScalarField2D, StructuredMesh,
};
use dsa_core::fitloop::gradient_check;
use dsa_core::nurbs::{backward_surface, eval_surface_grid, KnotGradConfig, KnotGradMode, KnotVector, NurbsSurface};
use dsa_core::piecewise1d::{fit_with_partition, BlockSparseJacobian, IntervalPartition};
use dsa_core::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Suite;

/// Largest error a block may show before the suite fails.
pub const FAIL_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct BlockResult {
    pub name: String,
    pub cases: usize,
    pub max_rel_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub blocks: Vec<BlockResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.blocks.iter().all(|b| b.max_rel_err <= FAIL_THRESHOLD)
    }

    pub fn block(&self, name: &str) -> Option<&BlockResult> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn table(&self) -> String {
        let mut out = format!("{:<10} {:<16} {:>6} {:>14}  status\n", "suite", "block", "cases", "max_rel_err");
        for b in &self.blocks {
            let status = if b.max_rel_err <= FAIL_THRESHOLD { "ok" } else { "FAIL" };
            let _ =
                writeln!(out, "{:<10} {:<16} {:>6} {:>14.3e}  {status}", self.suite, b.name, b.cases, b.max_rel_err);
        }
        out
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    match suite {
        Suite::Nurbs => nurbs_suite(seed, 20),
        Suite::Fem => fem_suite(seed),
        Suite::Piecewise => piecewise_suite(seed),
    }
}

const STEP: f64 = 1e-6;

fn random_cubic_surface(rng: &mut ChaCha8Rng) -> Result<NurbsSurface> {
    let (rows, cols) = (rng.gen_range(4..=7), rng.gen_range(4..=7));
    let ctrl = (0..rows * cols).map(|_| [(); 3].map(|_| rng.gen_range(-1.0..1.0))).collect();
    let mut s = NurbsSurface::clamped_bspline(rows, cols, 3, 3, ctrl)?;
    s.set_weights((0..rows * cols).map(|_| rng.gen_range(0.5..2.0)).collect())?;
    // jitter interior knots so the knot vectors are non-uniform
    let jitter = |kv: &KnotVector, rng: &mut ChaCha8Rng| -> Result<KnotVector> {
        let mut k = kv.knots().to_vec();
        let r = kv.interior_range();
        let h = 1.0 / (r.len() + 1) as f64;
        for i in r {
            k[i] += rng.gen_range(-0.3..0.3) * h;
        }
        KnotVector::new(3, k)
    };
    let (ku, kv) = (jitter(s.knots_u(), rng)?, jitter(s.knots_v(), rng)?);
    s.set_knots(ku, kv)?;
    Ok(s)
}

fn half_sq_loss(s: &NurbsSurface, target: &[[f64; 3]], n: usize) -> Result<f64> {
    let (grid, _) = eval_surface_grid(s, n, n)?;
    Ok(0.5
        * grid
            .points()
            .iter()
            .zip(target)
            .map(|(a, b)| (0..3).map(|c| (a[c] - b[c]).powi(2)).sum::<f64>())
            .sum::<f64>())
}

/// Control-point, weight and knot blocks of `½‖S - T‖²` on an 8×8 grid for
/// `count` random cubic surfaces.
pub fn nurbs_suite(seed: u64, count: usize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 8;
    let (mut e_ctrl, mut e_w, mut e_knot) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..count {
        let s = random_cubic_surface(&mut rng)?;
        let target: Vec<[f64; 3]> = (0..n * n).map(|_| [(); 3].map(|_| rng.gen_range(-1.0..1.0))).collect();
        let (grid, cache) = eval_surface_grid(&s, n, n)?;
        let up: Vec<[f64; 3]> =
            grid.points().iter().zip(&target).map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]]).collect();
        let g = backward_surface(&s, &cache, &up, &KnotGradConfig { mode: KnotGradMode::Exact, sigma: 1e-2 })?;

        let ctrl0: Vec<f64> = s.ctrl().iter().flatten().copied().collect();
        let analytic: Vec<f64> = g.d_ctrl.iter().flatten().copied().collect();
        e_ctrl = e_ctrl.max(gradient_check(
            |p| {
                let mut t = s.clone();
                for (c, chunk) in t.ctrl_mut().iter_mut().zip(p.chunks(3)) {
                    *c = [chunk[0], chunk[1], chunk[2]];
                }
                half_sq_loss(&t, &target, n)
            },
            &analytic,
            &ctrl0,
            STEP,
        )?);

        e_w = e_w.max(gradient_check(
            |p| {
                let mut t = s.clone();
                t.set_weights(p.to_vec())?;
                half_sq_loss(&t, &target, n)
            },
            &g.d_weights,
            s.weights(),
            STEP,
        )?);

        let (ru, rv) = (s.knots_u().interior_range(), s.knots_v().interior_range());
        let knots0: Vec<f64> =
            s.knots_u().knots()[ru.clone()].iter().chain(&s.knots_v().knots()[rv.clone()]).copied().collect();
        let analytic: Vec<f64> = g.d_knots_u[ru.clone()].iter().chain(&g.d_knots_v[rv.clone()]).copied().collect();
        e_knot = e_knot.max(gradient_check(
            |p| {
                let mut ku = s.knots_u().knots().to_vec();
                let mut kv = s.knots_v().knots().to_vec();
                ku[ru.clone()].copy_from_slice(&p[..ru.len()]);
                kv[rv.clone()].copy_from_slice(&p[ru.len()..]);
                let mut t = s.clone();
                t.set_knots(KnotVector::new(3, ku)?, KnotVector::new(3, kv)?)?;
                half_sq_loss(&t, &target, n)
            },
            &analytic,
            &knots0,
            STEP,
        )?);
    }
    Ok(SuiteReport {
        suite: "nurbs",
        blocks: vec![
            BlockResult { name: "ctrl".into(), cases: count, max_rel_err: e_ctrl },
            BlockResult { name: "weights".into(), cases: count, max_rel_err: e_w },
            BlockResult { name: "knots-exact".into(), cases: count, max_rel_err: e_knot },
        ],
    })
}

/// Energy gradient against differences of the energy for degrees 1 to 3 on
/// small meshes with a varying diffusivity.
pub fn fem_suite(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks = Vec::new();
    for d in 1..=3 {
        let mut worst = 0.0f64;
        let meshes = [(2, 2), (4, 3), (8, 8)];
        for &(nx, ny) in &meshes {
            let mesh = StructuredMesh::new(nx, ny, d)?;
            let nu = |x: f64, y: f64| 1.0 + 0.5 * (2.0 * x).sin() * (3.0 * y).cos();
            let problem =
                PoissonProblem::new(mesh, nu, |x, y| exact_solution_and_forcing(x, y).1, Boundary::default())?;
            let mut u = ScalarField2D::interpolate(mesh, |_, _| rng.gen_range(-1.0..1.0));
            apply_dirichlet(&mut u, 0.0);
            let g = problem.gradient(&u)?;
            let free: Vec<usize> = (0..mesh.num_nodes()).filter(|&k| !mesh.is_boundary(k)).collect();
            let x0: Vec<f64> = free.iter().map(|&k| u.coeffs()[k]).collect();
            let analytic: Vec<f64> = free.iter().map(|&k| g[k]).collect();
            worst = worst.max(gradient_check(
                |p| {
                    let mut v = u.clone();
                    for (&k, &val) in free.iter().zip(p) {
                        v.coeffs_mut()[k] = val;
                    }
                    problem.energy(&v)
                },
                &analytic,
                &x0,
                STEP,
            )?);
        }
        blocks.push(BlockResult { name: format!("energy-d{d}"), cases: meshes.len(), max_rel_err: worst });
    }
    Ok(SuiteReport { suite: "fem", blocks })
}

/// Weak Jacobian of the fixed-partition fit: `vjp(c)` against differences
/// of `<c, fit(x)>`.
pub fn piecewise_suite(seed: u64) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let partitions = [(12, vec![5]), (30, vec![7, 15, 22]), (40, vec![3, 10, 11 + 6, 30])];
    let mut blocks = Vec::new();
    for d in 0..=2 {
        let mut worst = 0.0f64;
        for (n, breaks) in &partitions {
            let part = IntervalPartition::new(*n, breaks.clone())?;
            let x: Vec<f64> = (0..*n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let c: Vec<f64> = (0..*n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let analytic = BlockSparseJacobian::new(part.clone(), d).vjp(&c)?;
            worst = worst.max(gradient_check(
                |p| {
                    let fit = fit_with_partition(p, &part, d)?;
                    Ok(fit.fitted.iter().zip(&c).map(|(a, b)| a * b).sum())
                },
                &analytic,
                &x,
                STEP,
            )?);
        }
        blocks.push(BlockResult { name: format!("jacobian-d{d}"), cases: partitions.len(), max_rel_err: worst });
    }
    Ok(SuiteReport { suite: "piecewise", blocks })
}
