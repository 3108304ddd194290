use gsam::optimizer::{
    bcd_sweep, block_coordinate_fit_with, lambda_max, lambda_max_exact, prox_gradient_fit_with, sparsity_pattern_probe,
};
use gsam::sim::{generate, generate_with_loss, noise_only, Scenario};
use gsam::{fit, AdditiveModel, Algorithm, Dataset, FitOptions, LossKind, PenaltySpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn centred_norm(y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (y.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt()
}

fn random_data(n: usize, p: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::<f64>::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    let y = (0..n)
        .map(|i| (3.0 * x[(i, 0)]).sin() + x[(i, 1)].powi(2) + 0.3 * rng.random_range(-1.0..1.0))
        .collect();
    Dataset::new(y, x, None).unwrap()
}

#[test]
fn gaussian_lambda_max_is_twice_the_centred_norm() {
    let y = vec![1.0, -0.2, 2.5, 0.7, -1.9, 0.4];
    let x = DMatrix::from_fn(6, 2, |i, j| if j == 0 { i as f64 } else { ((i * 5) % 6) as f64 });
    let data = Dataset::new(y.clone(), x, None).unwrap();
    let lm = lambda_max(&data, LossKind::Gaussian).unwrap();
    assert!((lm - 2.0 * centred_norm(&y)).abs() < 1e-12);

    // ties average the residual within a knot, which can only shrink the bound
    let tied = DMatrix::from_fn(6, 2, |i, j| (i * (j + 2)) as f64 % 5.0);
    let tied = Dataset::new(y.clone(), tied, None).unwrap();
    assert!(lambda_max(&tied, LossKind::Gaussian).unwrap() <= 2.0 * centred_norm(&y) + 1e-12);

    let constant = Dataset::new(vec![3.0; 6], data.x().clone(), None).unwrap();
    assert_eq!(lambda_max(&constant, LossKind::Gaussian).unwrap(), 0.0);
}

#[test]
fn fits_at_lambda_max_are_null() {
    let specs = [
        PenaltySpec::TrendFilter { order: 0 },
        PenaltySpec::TrendFilter { order: 2 },
        PenaltySpec::SobolevSpline,
        PenaltySpec::BasisSubspace { m: 3, family: gsam::BasisFamily::Polynomial },
    ];
    let data = random_data(50, 4, 1);
    let lm = lambda_max(&data, LossKind::Gaussian).unwrap();
    for spec in &specs {
        let (m, _) = fit(&data, LossKind::Gaussian, spec, lm, &FitOptions::default(), Algorithm::BlockCoordinate, None).unwrap();
        assert!(m.active_set().is_empty(), "{}", spec.label());
        assert!((m.intercept - data.mean_y()).abs() < 1e-12);
        let exact = lambda_max_exact(&data, LossKind::Gaussian, spec, None).unwrap();
        assert!(exact <= lm * (1.0 + 1e-9));
        let (m, _) = fit(&data, LossKind::Gaussian, spec, exact, &FitOptions::default(), Algorithm::BlockCoordinate, None).unwrap();
        assert!(m.active_set().is_empty(), "{} at exact threshold", spec.label());
        let (m, _) = fit(&data, LossKind::Gaussian, spec, 0.9 * exact, &FitOptions::default(), Algorithm::BlockCoordinate, None).unwrap();
        assert!(!m.active_set().is_empty(), "{} below exact threshold", spec.label());
    }
}

#[test]
fn balanced_logistic_data_is_null_at_lambda_max() {
    let n = 40;
    let x = DMatrix::from_fn(n, 2, |i, j| if j == 0 { (i as f64 - 19.5) / 20.0 } else { ((i * 7) % n) as f64 / n as f64 });
    let y: Vec<f64> = (0..n).map(|i| (i % 2) as f64).collect();
    let data = Dataset::new(y, x, None).unwrap();
    let lm = lambda_max(&data, LossKind::BernoulliLogit).unwrap();
    let spec = PenaltySpec::TrendFilter { order: 1 };
    let (m, _) = fit(&data, LossKind::BernoulliLogit, &spec, lm, &FitOptions::default(), Algorithm::ProxGradient, None).unwrap();
    assert!(m.active_set().is_empty());
    assert!(m.intercept.abs() < 1e-12);
}

#[test]
fn bcd_reaches_the_null_model_in_one_sweep_for_huge_lambda() {
    let data = random_data(30, 3, 2);
    let options = FitOptions { max_iter: 1, ..FitOptions::default() };
    let (m, trace) = block_coordinate_fit_with(&data, &PenaltySpec::SobolevSpline, 1e6, &options, None).unwrap();
    assert!(m.active_set().is_empty());
    assert!((m.intercept - data.mean_y()).abs() < 1e-12);
    assert!(trace.objectives.len() <= 2);
}

#[test]
fn bcd_traces_never_rise() {
    for seed in 0..50u64 {
        let sim = generate(Scenario::new((seed % 5) as u8 + 1).unwrap(), 50, 5, 300 + seed).unwrap();
        let spec = match seed % 3 {
            0 => PenaltySpec::TrendFilter { order: 0 },
            1 => PenaltySpec::TrendFilter { order: 1 },
            _ => PenaltySpec::SobolevSpline,
        };
        let lam = 0.1 * lambda_max(&sim.data, LossKind::Gaussian).unwrap();
        let (_, trace) = block_coordinate_fit_with(&sim.data, &spec, lam, &FitOptions::default(), None).unwrap();
        for w in trace.objectives.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "seed {seed}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn noiseless_additive_data_is_fitted_closely() {
    let n = 200;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = DMatrix::<f64>::from_fn(n, 3, |_, _| rng.random_range(0.0..1.0));
    let y: Vec<f64> = (0..n).map(|i| (6.0 * x[(i, 0)]).sin() + 2.0 * x[(i, 1)] * x[(i, 1)]).collect();
    let data = Dataset::new(y.clone(), x, None).unwrap();
    let lam = 1e-3 * lambda_max(&data, LossKind::Gaussian).unwrap();
    let options = FitOptions { rel_tol: 1e-10, max_iter: 5000, ..FitOptions::default() };
    let (m, _) = fit(&data, LossKind::Gaussian, &PenaltySpec::SobolevSpline, lam, &options, Algorithm::BlockCoordinate, None).unwrap();
    let pred = m.predict(data.x()).unwrap();
    let mean = data.mean_y();
    let ss_res: f64 = y.iter().zip(&pred).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|a| (a - mean).powi(2)).sum();
    assert!(1.0 - ss_res / ss_tot >= 0.99, "R^2 {}", 1.0 - ss_res / ss_tot);
}

#[test]
fn single_feature_with_tiny_penalty_nearly_interpolates() {
    let x = DMatrix::from_fn(8, 1, |i, _| i as f64);
    let y = vec![0.3, -1.0, 2.0, 0.5, 0.5, 1.7, -0.4, 0.9];
    let data = Dataset::new(y.clone(), x, None).unwrap();
    let options = FitOptions { rel_tol: 1e-14, max_iter: 10_000, ..FitOptions::default() };
    let (m, _) = fit(&data, LossKind::Gaussian, &PenaltySpec::TrendFilter { order: 0 }, 1e-5, &options, Algorithm::BlockCoordinate, None).unwrap();
    let pred = m.predict(data.x()).unwrap();
    for (a, b) in pred.iter().zip(&y) {
        assert!((a - b).abs() < 1e-3);
    }
}

#[test]
fn prox_gradient_and_bcd_agree() {
    let tight = FitOptions {
        max_iter: 50_000,
        rel_tol: 1e-14,
        step_tol: Some(1e-10),
        ..FitOptions::default()
    };
    for seed in 0..4u64 {
        let sim = generate(Scenario::new(seed as u8 + 1).unwrap(), 60, 8, 40 + seed).unwrap();
        for spec in [PenaltySpec::TrendFilter { order: 0 }, PenaltySpec::SobolevSpline] {
            let lam = 0.2 * lambda_max(&sim.data, LossKind::Gaussian).unwrap();
            let (pg, _) = prox_gradient_fit_with(&sim.data, LossKind::Gaussian, &spec, lam, &tight, None).unwrap();
            let (bcd, _) = block_coordinate_fit_with(&sim.data, &spec, lam, &tight, None).unwrap();
            let (a, b) = (pg.objective(&sim.data).unwrap(), bcd.objective(&sim.data).unwrap());
            assert!((a - b).abs() <= 1e-6 * b.abs(), "seed {seed} {}: {a} vs {b}", spec.label());
            // an extra sweep leaves a converged fit in place
            for m in [&pg, &bcd] {
                let again = bcd_sweep(&sim.data, m).unwrap();
                let (u, v) = (m.predict(sim.data.x()).unwrap(), again.predict(sim.data.x()).unwrap());
                let change = u.iter().zip(&v).fold(0.0f64, |acc, (s, t)| acc.max((s - t).abs()));
                assert!(change < 1e-7, "seed {seed} {}: change {change}", spec.label());
            }
        }
    }
}

#[test]
fn accepted_steps_majorize_for_every_loss() {
    for (k, loss) in [LossKind::Gaussian, LossKind::BernoulliLogit, LossKind::PoissonLog].into_iter().enumerate() {
        let sim = generate_with_loss(Scenario::new(3).unwrap(), 80, 6, 11 + k as u64, loss).unwrap();
        let lam = 0.1 * lambda_max(&sim.data, loss).unwrap();
        let (_, trace) = prox_gradient_fit_with(&sim.data, loss, &PenaltySpec::TrendFilter { order: 1 }, lam, &FitOptions::default(), None).unwrap();
        assert!(!trace.majorization_gaps.is_empty());
        for g in &trace.majorization_gaps {
            assert!(*g >= -1e-10, "{}: gap {g}", loss.name());
        }
    }
}

#[test]
fn glm_fits_pick_up_signal() {
    for loss in [LossKind::BernoulliLogit, LossKind::PoissonLog] {
        let sim = generate_with_loss(Scenario::new(2).unwrap(), 300, 8, 9, loss).unwrap();
        let lam = 0.3 * lambda_max(&sim.data, loss).unwrap();
        let (m, _) = fit(&sim.data, loss, &PenaltySpec::SobolevSpline, lam, &FitOptions::default(), Algorithm::ProxGradient, None).unwrap();
        let active = m.active_set();
        assert!(!active.is_empty(), "{}", loss.name());
        assert!(m.diagnostics.converged, "{}", loss.name());
        let null = AdditiveModel::null(&sim.data, loss, PenaltySpec::SobolevSpline, lam, None).unwrap();
        assert!(m.objective(&sim.data).unwrap() < null.objective(&sim.data).unwrap());
    }
}

#[test]
fn sparsity_probe_sizes() {
    let sim = generate(Scenario::new(4).unwrap(), 80, 6, 21).unwrap();
    let lm = lambda_max(&sim.data, LossKind::Gaussian).unwrap();
    let grid: Vec<f64> = (0..8).map(|k| 1.5 * lm * 0.5f64.powi(k)).collect();
    let squared = sparsity_pattern_probe(&sim.data, LossKind::Gaussian, true, &grid, &FitOptions::default()).unwrap();
    assert!(squared.iter().all(|&s| s == 0 || s == 6), "{squared:?}");
    let seminorm = sparsity_pattern_probe(&sim.data, LossKind::Gaussian, false, &grid, &FitOptions::default()).unwrap();
    assert_eq!(squared[0], 0);
    assert_eq!(seminorm[0], 0);
}

#[test]
fn omega_reweighting_keeps_the_threshold_consistent() {
    let data = random_data(40, 3, 8);
    for omega in [0.0, 0.3, 0.9] {
        let spec = PenaltySpec::TrendFilter { order: 0 };
        let exact = lambda_max_exact(&data, LossKind::Gaussian, &spec, Some(omega)).unwrap();
        let options = FitOptions { omega: Some(omega), ..FitOptions::default() };
        let (m, _) = fit(&data, LossKind::Gaussian, &spec, exact, &options, Algorithm::BlockCoordinate, None).unwrap();
        assert!(m.active_set().is_empty(), "omega {omega}");
        assert_eq!(m.omega, Some(omega));
    }
}

#[test]
fn pure_noise_under_a_large_penalty_stays_null() {
    let data = noise_only(60, 5, 3, LossKind::Gaussian).unwrap();
    let lm = lambda_max(&data, LossKind::Gaussian).unwrap();
    let (m, _) = fit(&data, LossKind::Gaussian, &PenaltySpec::TrendFilter { order: 1 }, 1.01 * lm, &FitOptions::default(), Algorithm::ProxGradient, None).unwrap();
    assert!(m.active_set().is_empty());
}

#[test]
fn bcd_rejects_non_gaussian_losses() {
    let data = random_data(20, 2, 1);
    let r = fit(&data, LossKind::PoissonLog, &PenaltySpec::SobolevSpline, 0.1, &FitOptions::default(), Algorithm::BlockCoordinate, None);
    assert!(r.is_err());
}
