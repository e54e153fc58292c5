//! Command-line front end: `dsa <command> [flags]`.
//!
//! Exit status is 0 on success, 1 when a computation fails (divergence,
//! non-finite data, bad input files, gradient checks above threshold) and
//! 2 for usage errors.

mod commands;
pub mod gradcheck;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "dsa", version, about = "Differentiable spline approximation toolkit")]
pub struct Cli {
    /// Worker threads for data-parallel kernels.
    #[arg(long, global = true, env = "DSA_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Seed for every random draw.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Best k-piecewise polynomial fit of a 1D signal.
    Fit1d(Fit1dArgs),
    /// Piecewise-constant projection of an image over its thresholded regions.
    Pcw2d(Pcw2dArgs),
    /// Evaluate a NURBS surface on a uniform parameter grid.
    EvalNurbs(EvalNurbsArgs),
    /// Fit a cubic NURBS surface to a point grid.
    FitSurface(FitSurfaceArgs),
    /// Solve the Poisson problem on the unit square by energy minimization.
    SolvePoisson(SolvePoissonArgs),
    /// Compare analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct Fit1dArgs {
    /// Signal file, one value per line.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub d: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Pcw2dArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the component labels as a grid.
    #[arg(long)]
    pub labels_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalNurbsArgs {
    /// Surface JSON.
    #[arg(long)]
    pub surface: PathBuf,
    #[arg(long)]
    pub nx: usize,
    #[arg(long)]
    pub ny: usize,
    /// Output prefix; writes `<prefix>_x.txt`, `_y.txt`, `_z.txt`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitSurfaceArgs {
    /// Target prefix (`<prefix>_x.txt`, `_y.txt`, `_z.txt`).
    #[arg(long, required_unless_present = "bukin", conflicts_with = "bukin")]
    pub target: Option<PathBuf>,
    /// Synthesize the Bukin N.6 target on an NX x NY grid.
    #[arg(long, num_args = 2, value_names = ["NX", "NY"])]
    pub bukin: Option<Vec<usize>>,
    /// Fit configuration JSON; missing fields take defaults.
    #[arg(long)]
    pub cfg: Option<PathBuf>,
    /// Initial surface JSON instead of a random clamped cubic.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Control grid of the random initial surface.
    #[arg(long, num_args = 2, value_names = ["ROWS", "COLS"], default_values_t = [8, 8])]
    pub ctrl: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    /// Override the configured iteration count.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Update interior knots as well as control points.
    #[arg(long)]
    pub reparameterize: bool,
    /// Keep every k-th loss value in the report.
    #[arg(long, default_value_t = 1)]
    pub history_every: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Gd,
    Adam,
    Cg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Forcing {
    /// `2π² sin(πx) sin(πy)`, whose solution for ν = 1 is known.
    Manufactured,
    /// `f ≡ 1`.
    Unit,
}

#[derive(Debug, Args)]
pub struct SolvePoissonArgs {
    #[arg(long)]
    pub nx: usize,
    #[arg(long)]
    pub ny: usize,
    #[arg(long, default_value_t = 1)]
    pub degree: usize,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Solver configuration JSON; flags override it.
    #[arg(long)]
    pub cfg: Option<PathBuf>,
    /// Diffusivity coefficients `w1,w2,w3,w4` in [-3, 3]; ν = 1 without them.
    #[arg(long, value_parser = parse_omega, allow_hyphen_values = true, conflicts_with = "random_omega")]
    pub omega: Option<[f64; 4]>,
    /// Draw the diffusivity coefficients from the seed.
    #[arg(long)]
    pub random_omega: bool,
    #[arg(long, value_enum, default_value_t = Forcing::Manufactured)]
    pub forcing: Forcing,
    /// Nodal field, rows along y.
    #[arg(long)]
    pub out: PathBuf,
    /// Convergence log as CSV (iteration, energy, grad_max).
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Nodal diffusivity map.
    #[arg(long)]
    pub nu_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Nurbs,
    Fem,
    Piecewise,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
}

/// Parses `argv` (program name first) and runs the command.
fn parse_omega(s: &str) -> Result<[f64; 4], String> {
    let values = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    values.try_into().map_err(|v: Vec<f64>| format!("expected 4 comma-separated values, got {}", v.len()))
}

pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if cli.threads == 0 {
        eprintln!("error: --threads must be at least 1");
        return 2;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 1;
        }
    };
    match pool.install(|| commands::run(&cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
