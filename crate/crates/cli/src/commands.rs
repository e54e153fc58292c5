use std::path::Path;

use dsa_core::fem::{
    diffusivity_field, exact_solution_and_forcing, l2_error, solve_poisson, DiffusivityParams, ScalarField2D,
    SolveMethod, SolverConfig, StructuredMesh,
};
use dsa_core::fitloop::{bukin_target, fit_surface, random_init, FitConfig};
use dsa_core::io::{
    read_grid, read_json, read_point_grid, read_signal, write_atomic, write_grid, write_json, write_point_grid,
};
use dsa_core::nurbs::{eval_surface_grid, NurbsSurface};
use dsa_core::pcw2d::{connected_components, pcw2d_forward};
use dsa_core::piecewise1d::fit_kpiecewise;
use dsa_core::{Error, Grid, Result};
use serde::Serialize;

use crate::gradcheck::run_suite;
use crate::{Cli, Command, EvalNurbsArgs, Fit1dArgs, FitSurfaceArgs, Forcing, Method, Pcw2dArgs, SolvePoissonArgs};

pub(crate) fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Fit1d(a) => fit1d(a),
        Command::Pcw2d(a) => pcw2d(a),
        Command::EvalNurbs(a) => eval_nurbs(a),
        Command::FitSurface(a) => fit(a, cli.seed),
        Command::SolvePoisson(a) => solve(a, cli.seed),
        Command::Gradcheck(a) => {
            let report = run_suite(a.suite, cli.seed.unwrap_or(0))?;
            print!("{}", report.table());
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn fit1d(a: &Fit1dArgs) -> Result<i32> {
    let signal = read_signal(&a.input)?;
    let fit = fit_kpiecewise(&signal, a.k, a.d)?;
    write_json(&a.out, &fit.summary())?;
    Ok(0)
}

fn pcw2d(a: &Pcw2dArgs) -> Result<i32> {
    let image = read_grid(&a.input)?;
    let labels = connected_components(&image, a.threshold)?;
    write_grid(&a.out, &pcw2d_forward(&image, &labels)?)?;
    if let Some(path) = &a.labels_out {
        let ids = labels.labels().iter().map(|&l| l as f64).collect();
        write_grid(path, &Grid::new(labels.rows(), labels.cols(), ids)?)?;
    }
    Ok(0)
}

fn eval_nurbs(a: &EvalNurbsArgs) -> Result<i32> {
    let surface: NurbsSurface = read_json(&a.surface)?;
    let (grid, _) = eval_surface_grid(&surface, a.nx, a.ny)?;
    write_point_grid(&a.out, &grid)?;
    Ok(0)
}

fn fit(a: &FitSurfaceArgs, seed: Option<u64>) -> Result<i32> {
    let target = match (&a.target, &a.bukin) {
        (Some(prefix), _) => read_point_grid(prefix)?,
        (None, Some(n)) => bukin_target(n[0], n[1])?,
        (None, None) => return Err(Error::Config("either --target or --bukin is required".into())),
    };
    let mut cfg: FitConfig = match &a.cfg {
        Some(path) => read_json(path)?,
        None => FitConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = a.iterations {
        cfg.iterations = n;
    }
    if a.reparameterize {
        cfg.reparameterize_knots = true;
    }
    let init = match &a.init {
        Some(path) => read_json(path)?,
        None => random_init(&target, a.ctrl[0], a.ctrl[1], a.degree, cfg.seed)?,
    };
    let report = fit_surface(&target, &init, &cfg)?;
    eprintln!(
        "fit-surface: final mse {:.6e} after {} iterations in {:.2}s",
        report.final_mse, cfg.iterations, report.seconds
    );
    write_json(&a.out, &report.summary(a.history_every))?;
    Ok(0)
}

#[derive(Serialize)]
struct SolveSummary {
    method: SolveMethod,
    nx: usize,
    ny: usize,
    degree: usize,
    omega: Option<[f64; 4]>,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
    energy: f64,
    /// Against the manufactured solution; only meaningful for ν = 1.
    l2_error: Option<f64>,
}

fn solve(a: &SolvePoissonArgs, seed: Option<u64>) -> Result<i32> {
    let mesh = StructuredMesh::new(a.nx, a.ny, a.degree)?;
    let mut cfg: SolverConfig = match &a.cfg {
        Some(path) => read_json(path)?,
        None => SolverConfig::default(),
    };
    if let Some(m) = a.method {
        cfg.method = match m {
            Method::Gd => SolveMethod::Gd,
            Method::Adam => SolveMethod::Adam,
            Method::Cg => SolveMethod::Cg,
        };
    }
    if let Some(t) = a.tol {
        cfg.tol = t;
    }
    if let Some(n) = a.max_iters {
        cfg.max_iters = n;
    }
    let params = match (&a.omega, a.random_omega) {
        (Some(w), _) => Some(DiffusivityParams::new(*w)?),
        (None, true) => Some(DiffusivityParams::sample(seed.unwrap_or(0))),
        (None, false) => None,
    };
    let nu = |x: f64, y: f64| params.as_ref().map_or(1.0, |p| diffusivity_field(p, x, y));
    let forcing = a.forcing;
    let f = move |x: f64, y: f64| match forcing {
        Forcing::Manufactured => exact_solution_and_forcing(x, y).1,
        Forcing::Unit => 1.0,
    };
    let sol = solve_poisson(&mesh, nu, f, &cfg)?;
    write_grid(&a.out, &sol.field.to_grid())?;
    if let Some(path) = &a.log {
        write_log(path, &sol.log)?;
    }
    if let Some(path) = &a.nu_out {
        write_grid(path, &ScalarField2D::interpolate(mesh, nu).to_grid())?;
    }
    let l2 = (params.is_none() && forcing == Forcing::Manufactured)
        .then(|| l2_error(&sol.field, |x, y| exact_solution_and_forcing(x, y).0));
    let summary = SolveSummary {
        method: cfg.method,
        nx: a.nx,
        ny: a.ny,
        degree: a.degree,
        omega: params.map(|p| p.omega()),
        iterations: sol.iterations,
        grad_norm: sol.grad_norm,
        converged: sol.converged,
        energy: sol.log.last().map_or(f64::NAN, |e| e.energy),
        l2_error: l2,
    };
    println!("{}", serde_json::to_string(&summary)?);
    if !sol.converged {
        eprintln!(
            "solve-poisson: stopped after {} iterations with gradient {:.3e} > tol",
            sol.iterations, sol.grad_norm
        );
    }
    Ok(0)
}

fn write_log(path: &Path, log: &[dsa_core::fem::LogEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for entry in log {
        w.serialize(entry).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    write_atomic(path, &bytes)
}
