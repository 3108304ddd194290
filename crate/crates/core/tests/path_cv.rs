use gsam::optimizer::lambda_max;
use gsam::path::{fold_assignment, fold_path, log_grid, select_by_test_error, select_index};
use gsam::sim::{generate, noise_only, Scenario};
use gsam::{fit, fit_path, kfold_cv, lambda_grid, Algorithm, CvRule, Dataset, FitOptions, LossKind, PathResult, PenaltySpec};

fn tf0() -> PenaltySpec {
    PenaltySpec::TrendFilter { order: 0 }
}

#[test]
fn grid_is_log_spaced_from_the_top() {
    let g = log_grid(1.0, 3, 0.01).unwrap();
    assert_eq!(g.len(), 3);
    assert!((g[0] - 1.0).abs() < 1e-15 && (g[1] - 0.1).abs() < 1e-12 && (g[2] - 0.01).abs() < 1e-12);
    let sim = generate(Scenario::new(2).unwrap(), 60, 4, 1).unwrap();
    let g = lambda_grid(&sim.data, LossKind::Gaussian, 10, 1e-2, None).unwrap();
    assert!((g[0] - lambda_max(&sim.data, LossKind::Gaussian).unwrap()).abs() < 1e-12);
    assert!(g.windows(2).all(|w| w[1] < w[0]));
    assert!(log_grid(1.0, 3, 1.5).is_err());
}

#[test]
fn path_starts_null_and_grows() {
    let sim = generate(Scenario::new(3).unwrap(), 100, 6, 4).unwrap();
    let grid = lambda_grid(&sim.data, LossKind::Gaussian, 12, 1e-2, None).unwrap();
    let path = fit_path(&sim.data, &PenaltySpec::SobolevSpline, LossKind::Gaussian, &grid, &FitOptions::default(), Algorithm::BlockCoordinate).unwrap();
    assert!(path.failure.is_none());
    assert_eq!(path.models.len(), grid.len());
    assert_eq!(path.active_sizes[0], 0);
    assert!(*path.active_sizes.last().unwrap() > 0);
}

#[test]
fn warm_and_cold_starts_reach_the_same_objective() {
    let tight = FitOptions { rel_tol: 1e-12, max_iter: 20_000, ..FitOptions::default() };
    let sim = generate(Scenario::new(1).unwrap(), 80, 5, 7).unwrap();
    let grid = lambda_grid(&sim.data, LossKind::Gaussian, 8, 1e-2, None).unwrap();
    let path = fit_path(&sim.data, &tf0(), LossKind::Gaussian, &grid, &tight, Algorithm::BlockCoordinate).unwrap();
    for (i, &lam) in grid.iter().enumerate() {
        let (cold, _) = fit(&sim.data, LossKind::Gaussian, &tf0(), lam, &tight, Algorithm::BlockCoordinate, None).unwrap();
        let warm = path.models[i].objective(&sim.data).unwrap();
        let cold = cold.objective(&sim.data).unwrap();
        assert!(warm <= cold + 1e-6 * cold.abs().max(1.0), "lambda {lam}: warm {warm} cold {cold}");
        assert!((warm - cold).abs() <= 1e-6 * cold.abs().max(1.0));
    }
}

#[test]
fn pure_noise_selects_near_the_top_of_the_path() {
    let mut near_top = 0;
    for seed in 0..5 {
        let data = noise_only(100, 5, seed, LossKind::Gaussian).unwrap();
        let grid = lambda_grid(&data, LossKind::Gaussian, 15, 1e-2, None).unwrap();
        let cv = kfold_cv(&data, &tf0(), LossKind::Gaussian, &grid, 5, seed, CvRule::OneSe, &FitOptions::default(), Algorithm::BlockCoordinate).unwrap();
        if cv.selected_index.unwrap() <= 2 {
            near_top += 1;
        }
    }
    assert!(near_top >= 4, "{near_top} of 5");
}

#[test]
fn min_rule_picks_the_smallest_cv_error() {
    let sim = generate(Scenario::new(2).unwrap(), 80, 4, 12).unwrap();
    let grid = lambda_grid(&sim.data, LossKind::Gaussian, 10, 1e-2, None).unwrap();
    let cv = kfold_cv(&sim.data, &tf0(), LossKind::Gaussian, &grid, 4, 3, CvRule::Min, &FitOptions::default(), Algorithm::BlockCoordinate).unwrap();
    let mean = cv.cv_mean.as_ref().unwrap();
    let i = cv.selected_index.unwrap();
    assert!(mean.iter().all(|v| mean[i] <= *v));
    assert_eq!(cv.selected_lambda_min, Some(grid[i]));
    let i1 = select_index(mean, cv.cv_se.as_ref().unwrap(), CvRule::OneSe);
    assert!(i1 <= i);
    assert_eq!(cv.selected_lambda_1se, Some(grid[i1]));
}

#[test]
fn cv_output_is_reproducible_for_a_seed() {
    let sim = generate(Scenario::new(4).unwrap(), 60, 4, 2).unwrap();
    let grid = lambda_grid(&sim.data, LossKind::Gaussian, 6, 1e-2, None).unwrap();
    let run = || {
        kfold_cv(&sim.data, &PenaltySpec::SobolevSpline, LossKind::Gaussian, &grid, 3, 99, CvRule::OneSe, &FitOptions::default(), Algorithm::BlockCoordinate)
            .unwrap()
            .to_json()
            .unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    let back = PathResult::from_json(&a).unwrap();
    assert_eq!(back.to_json().unwrap(), a);
}

#[test]
fn held_out_rows_do_not_touch_the_fold_fit() {
    let sim = generate(Scenario::new(3).unwrap(), 60, 4, 8).unwrap();
    let folds = fold_assignment(60, 4, 5);
    let grid = lambda_grid(&sim.data, LossKind::Gaussian, 5, 1e-2, None).unwrap();
    let (path, _) = fold_path(&sim.data, &folds, 1, &tf0(), LossKind::Gaussian, &grid, &FitOptions::default(), Algorithm::BlockCoordinate).unwrap();

    let y: Vec<f64> = sim
        .data
        .y()
        .iter()
        .zip(&folds)
        .map(|(v, f)| if *f == 1 { v + 1e3 } else { *v })
        .collect();
    let poisoned = Dataset::new(y, sim.data.x().clone(), None).unwrap();
    let (again, _) = fold_path(&poisoned, &folds, 1, &tf0(), LossKind::Gaussian, &grid, &FitOptions::default(), Algorithm::BlockCoordinate).unwrap();
    for (a, b) in path.models.iter().zip(&again.models) {
        assert_eq!(a.intercept, b.intercept);
        for (ca, cb) in a.components.iter().zip(&b.components) {
            assert_eq!(ca.values, cb.values);
        }
    }
}

#[test]
fn too_few_rows_for_the_folds_is_an_error() {
    let sim = generate(Scenario::new(1).unwrap(), 9, 4, 1).unwrap();
    let grid = lambda_grid(&sim.data, LossKind::Gaussian, 3, 1e-1, None).unwrap();
    assert!(kfold_cv(&sim.data, &tf0(), LossKind::Gaussian, &grid, 5, 0, CvRule::Min, &FitOptions::default(), Algorithm::BlockCoordinate).is_err());
    assert!(kfold_cv(&sim.data, &tf0(), LossKind::Gaussian, &grid, 1, 0, CvRule::Min, &FitOptions::default(), Algorithm::BlockCoordinate).is_err());
}

#[test]
fn test_set_selection_uses_the_lowest_error() {
    let train = generate(Scenario::new(2).unwrap(), 80, 4, 30).unwrap();
    let test = generate(Scenario::new(2).unwrap(), 80, 4, 31).unwrap();
    let grid = lambda_grid(&train.data, LossKind::Gaussian, 8, 1e-2, None).unwrap();
    let mut path = fit_path(&train.data, &tf0(), LossKind::Gaussian, &grid, &FitOptions::default(), Algorithm::BlockCoordinate).unwrap();
    let errors = select_by_test_error(&mut path, &test.data).unwrap();
    let i = path.selected_index.unwrap();
    assert!(errors.iter().all(|e| errors[i] <= *e));
    assert!(path.selected_model().is_some());
}
