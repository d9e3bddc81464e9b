use rayon::prelude::*;
use ratlogit::measure::max_pdf_distance;
use ratlogit::prelude::*;

fn fitted(noise: NoiseMode) -> (DynamicConfig, CompetitionUtility) {
    let grid = Grid::new(500).unwrap();
    let config = DynamicConfig::new(grid, Kappa::ONE, noise).unwrap();
    (config, CompetitionUtility::new(CompetitionParams::FITTED, grid).unwrap())
}

#[test]
fn mass_drift_after_ten_thousand_steps() {
    let g = Grid::new(32).unwrap();
    let flat = BilinearKernel::constant(g, 0.3).unwrap();
    let c = DynamicConfig::new(g, Kappa::new(0.5).unwrap(), NoiseMode::Positive(0.1)).unwrap();
    let mut mu = GridMeasure::point_mass(g, 31).unwrap();
    for _ in 0..10_000 {
        mu = euler_step(&c, &flat, &mu).unwrap();
    }
    assert!((mu.total_mass() - 1.0).abs() < 1e-12);
    assert!(mu.masses().iter().all(|&m| m >= 0.0));
}

#[test]
fn fitted_model_stationary_moments() {
    let (c, model) = fitted(NoiseMode::Positive(0.01));
    let traj = run_to_stationary(&c, &model, &GridMeasure::uniform(c.grid), 2_000_000).unwrap();
    assert!(traj.is_stationary());
    let (mean, std) = traj.final_measure().mean_and_std();
    assert!((mean - 0.32471).abs() < 1e-4, "{mean}");
    assert!((std - 0.30377).abs() < 1e-4, "{std}");
}

/// Runs the fitted model for each noise mode to t = 1 and t = 10.
fn fitted_runs(modes: &[NoiseMode]) -> Vec<Trajectory> {
    modes
        .par_iter()
        .map(|&noise| {
            let (c, model) = fitted(noise);
            run_until(&c, &model, &GridMeasure::uniform(c.grid), 10.0, &[1.0, 10.0]).unwrap()
        })
        .collect()
}

#[test]
fn vanishing_noise_convergence_and_triangle_inequality() {
    let etas = [0.1, 0.01, 0.001, 0.0001];
    let modes: Vec<NoiseMode> = std::iter::once(NoiseMode::VanishingLimit)
        .chain(etas.iter().map(|&e| NoiseMode::Positive(e)))
        .collect();
    let runs = fitted_runs(&modes);
    let (reference, perturbed) = runs.split_first().unwrap();

    let sup_err = |traj: &Trajectory| {
        [1.0, 10.0]
            .iter()
            .map(|&t| max_pdf_distance(&traj.at(t).unwrap().measure, &reference.at(t).unwrap().measure).unwrap())
            .fold(0.0, f64::max)
    };
    let errs: Vec<f64> = perturbed.iter().map(sup_err).collect();
    for (w, e) in errs.windows(2).zip(etas.windows(2)) {
        assert!(w[1] < w[0], "{errs:?}");
        let rate = (w[0] / w[1]).ln() / (e[0] / e[1]).ln();
        assert!(rate >= 0.9, "rate {rate} between eta {} and {}", e[0], e[1]);
    }

    // ‖μ_η1 − μ_η2‖ ≤ ‖μ_η1 − μ_0‖ + ‖μ_0 − μ_η2‖ at each recorded time.
    for t in [1.0, 10.0] {
        let at = |tr: &Trajectory| tr.at(t).unwrap().measure.clone();
        for i in 0..perturbed.len() {
            for j in i + 1..perturbed.len() {
                let direct = variational_distance(&at(&perturbed[i]), &at(&perturbed[j])).unwrap();
                let via = variational_distance(&at(&perturbed[i]), &at(reference)).unwrap()
                    + variational_distance(&at(reference), &at(&perturbed[j])).unwrap();
                assert!(direct <= via + 1e-15);
            }
        }
    }
}

#[test]
fn convergence_table_matches_direct_runs() {
    let g = Grid::new(60).unwrap();
    let small = CompetitionUtility::new(CompetitionParams::FITTED, g).unwrap();
    let c = DynamicConfig::new(g, Kappa::ONE, NoiseMode::VanishingLimit).unwrap();
    let init = GridMeasure::uniform(g);
    let rows = eta_convergence_table(&c, &small, &init, &[0.1, 0.01], &[0.5]).unwrap();
    let direct = |noise| {
        let cfg = c.with_noise(noise).unwrap();
        run_until(&cfg, &small, &init, 0.5, &[0.5]).unwrap().final_measure().clone()
    };
    let limit = direct(NoiseMode::VanishingLimit);
    for row in &rows {
        let e = max_pdf_distance(&direct(NoiseMode::Positive(row.eta)), &limit).unwrap();
        assert_eq!(e, row.error);
    }
    let rate = (rows[0].error / rows[1].error).ln() / (10f64).ln();
    assert_eq!(rows[1].rate, Some(rate));
}

#[test]
fn runs_are_bitwise_reproducible() {
    let g = Grid::new(80).unwrap();
    let model = CompetitionUtility::new(CompetitionParams::FITTED, g).unwrap();
    let c = DynamicConfig::new(g, Kappa::new(0.3).unwrap(), NoiseMode::Positive(0.02)).unwrap();
    let a = run_until(&c, &model, &GridMeasure::uniform(g), 2.0, &[0.5, 2.0]).unwrap();
    let b = run_until(&c, &model, &GridMeasure::uniform(g), 2.0, &[0.5, 2.0]).unwrap();
    assert_eq!(a, b);
}

#[test]
fn degenerate_limit_is_an_error() {
    let g = Grid::new(20).unwrap();
    // Pure cost: U = −a x² < 0 everywhere.
    let p = CompetitionParams { a: 0.5, b: 0.0, c: 1.0, d: 0.0, alpha: 0.2, epsilon: None };
    let model = CompetitionUtility::new(p, g).unwrap();
    let c = DynamicConfig::new(g, Kappa::ONE, NoiseMode::VanishingLimit).unwrap();
    let err = run_to_stationary(&c, &model, &GridMeasure::uniform(g), 100).unwrap_err();
    assert!(matches!(err, Error::DegenerateWeights { step: Some(0) }));
    assert_eq!(err.exit_code(), 2);
}
