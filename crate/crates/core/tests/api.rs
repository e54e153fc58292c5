use dsa_core::fem::{
    exact_solution_and_forcing, l2_error, neumann_pad, solve_poisson, Boundary, SideCondition, SolveMethod,
    SolverConfig, StructuredMesh,
};
use dsa_core::fitloop::{fit_surface, mse_loss, random_init, FitConfig, Optimizer};
use dsa_core::io::{read_json, read_point_grid, read_signal, write_json, write_point_grid};
use dsa_core::nurbs::{eval_surface_grid, NurbsSurface};
use dsa_core::pcw2d::{connected_components, pcw2d_forward, pcw2d_vjp};
use dsa_core::piecewise1d::{fit_kpiecewise, FitSummary};
use dsa_core::{Error, Grid};

#[test]
fn signal_file_to_fit_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.txt");
    std::fs::write(&path, "5\n5\n5\n-1\n-1\n-1\n-1\n").unwrap();
    let x = read_signal(&path).unwrap();
    let fit = fit_kpiecewise(&x, 2, 0).unwrap();
    assert_eq!(fit.partition.breaks(), &[3]);
    assert_eq!(fit.fitted, x);

    let out = dir.path().join("fit.json");
    write_json(&out, &fit.summary()).unwrap();
    let back: FitSummary = read_json(&out).unwrap();
    assert_eq!(back, fit.summary());

    let jac = fit.jacobian();
    let g = jac.vjp(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 4.0]).unwrap();
    assert_eq!(g[..3], [1.0 / 3.0; 3]);
    assert_eq!(g[3..], [1.0; 4]);
}

#[test]
fn infeasible_split_is_reported() {
    assert!(matches!(fit_kpiecewise(&[1.0, 2.0, 3.0], 2, 1), Err(Error::InfeasibleArguments(_))));
}

#[test]
fn image_layer_round_trip() {
    let img = Grid::new(3, 3, vec![0.9, 0.8, 0.0, 0.7, 0.1, 0.0, 0.0, 0.0, 0.6]).unwrap();
    let labels = connected_components(&img, 0.5).unwrap();
    assert_eq!(labels.num_components(), 3);
    let flat = pcw2d_forward(&img, &labels).unwrap();
    assert!((flat.get(0, 0) - 0.8).abs() < 1e-15);
    assert_eq!(flat.get(2, 2), 0.6);
    let g = pcw2d_vjp(&labels, &Grid::filled(3, 3, 2.0)).unwrap();
    assert!(g.as_slice().iter().all(|&v| (v - 2.0).abs() < 1e-15));
}

#[test]
fn surface_json_and_point_grid_files() {
    let dir = tempfile::tempdir().unwrap();
    let ctrl = (0..16).map(|k| [(k / 4) as f64, (k % 4) as f64, ((k * 7) % 5) as f64 * 0.1]).collect();
    let surface = NurbsSurface::clamped_bspline(4, 4, 2, 3, ctrl).unwrap();
    let path = dir.path().join("s.json");
    write_json(&path, &surface).unwrap();
    let back: NurbsSurface = read_json(&path).unwrap();
    assert_eq!(back, surface);

    let (grid, _) = eval_surface_grid(&back, 6, 5).unwrap();
    let prefix = dir.path().join("pts");
    write_point_grid(&prefix, &grid).unwrap();
    let reread = read_point_grid(&prefix).unwrap();
    assert_eq!(reread.shape(), (6, 5));
    let (mse, _) = mse_loss(&reread, &grid).unwrap();
    assert!(mse <= 1e-30);
}

#[test]
fn fitting_lowers_the_loss() {
    let ctrl =
        (0..25).map(|k| [(k / 5) as f64 / 4.0, (k % 5) as f64 / 4.0, ((k / 5) as f64 - 2.0).powi(2) * 0.1]).collect();
    let truth = NurbsSurface::clamped_bspline(5, 5, 3, 3, ctrl).unwrap();
    let (target, _) = eval_surface_grid(&truth, 12, 12).unwrap();
    let init = random_init(&target, 5, 5, 3, 3).unwrap();
    for (optimizer, factor) in [(Optimizer::default(), 0.5), (Optimizer::PlainGd, 1.0)] {
        let cfg = FitConfig { iterations: 200, optimizer, reparameterize_knots: true, ..FitConfig::default() };
        let report = fit_surface(&target, &init, &cfg).unwrap();
        assert!(
            report.final_mse < factor * report.loss_history[0],
            "{optimizer:?} {:?}",
            (report.final_mse, report.loss_history[0])
        );
        let knots = report.surface.knots_u().knots();
        assert!(knots.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn poisson_with_mixed_boundary() {
    let mesh = StructuredMesh::new(8, 8, 2).unwrap();
    let cfg = SolverConfig { method: SolveMethod::Cg, tol: 1e-10, ..SolverConfig::default() };
    let sol = solve_poisson(&mesh, |_, _| 1.0, |x, y| exact_solution_and_forcing(x, y).1, &cfg).unwrap();
    assert!(sol.converged);
    assert!(l2_error(&sol.field, |x, y| exact_solution_and_forcing(x, y).0) < 1e-3);

    // u = x solves -Δu = 0 with u(0)=0, u(1)=1 and no flux through y=0, y=1
    let boundary = Boundary {
        left: SideCondition::Dirichlet(0.0),
        right: SideCondition::Dirichlet(1.0),
        bottom: SideCondition::ZeroNeumann,
        top: SideCondition::ZeroNeumann,
    };
    let cfg = SolverConfig { boundary, ..cfg };
    let sol = solve_poisson(&mesh, |_, _| 1.0, |_, _| 0.0, &cfg).unwrap();
    assert!(l2_error(&sol.field, |x, _| x) < 1e-9);

    let padded = neumann_pad(&sol.field.to_grid());
    assert_eq!(padded.shape(), (19, 19));
}
