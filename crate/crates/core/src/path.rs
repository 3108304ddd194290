//! Regularization paths with warm starts, K-fold cross-validation and
//! selection rules.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{GsamError, Result};
use crate::losses::LossKind;
use crate::model::{AdditiveModel, SCHEMA_VERSION};
use crate::optimizer::{fit, lambda_max_omega, Algorithm, FitOptions};
use crate::penalty::PenaltySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvRule {
    Min,
    OneSe,
}

impl CvRule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(CvRule::Min),
            "1se" | "one_se" | "onese" => Ok(CvRule::OneSe),
            other => Err(GsamError::InvalidArgument(format!("unknown selection rule '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFailure {
    pub index: usize,
    pub lambda: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    pub models: Vec<AdditiveModel>,
    pub active_sizes: Vec<usize>,
    pub objectives: Vec<f64>,
    pub cv_mean: Option<Vec<f64>>,
    pub cv_se: Option<Vec<f64>>,
    pub selected_lambda_min: Option<f64>,
    pub selected_lambda_1se: Option<f64>,
    /// Index of the model picked by the requested rule.
    pub selected_index: Option<usize>,
    pub failure: Option<PathFailure>,
}

impl PathResult {
    pub fn selected_model(&self) -> Option<&AdditiveModel> {
        self.selected_index.and_then(|i| self.models.get(i))
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            schema_version: u32,
            #[serde(flatten)]
            path: &'a PathResult,
        }
        serde_json::to_string_pretty(&Doc {
            schema_version: SCHEMA_VERSION,
            path: self,
        })
        .map_err(|e| GsamError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Doc {
            schema_version: u32,
            #[serde(flatten)]
            path: PathResult,
        }
        let doc: Doc = serde_json::from_str(s).map_err(|e| GsamError::Serialization(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(GsamError::Serialization(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        Ok(doc.path)
    }

    /// Plain-text table of the path.
    pub fn table(&self) -> String {
        let mut out = String::from("  index       lambda   |S|      cv_mean        cv_se\n");
        for (i, lam) in self.lambdas.iter().enumerate().take(self.models.len()) {
            let cv = |v: &Option<Vec<f64>>| v.as_ref().map_or("-".to_string(), |x| format!("{:.6e}", x[i]));
            let mark = if Some(i) == self.selected_index { " *" } else { "" };
            out.push_str(&format!(
                "{:>7} {:>12.6e} {:>5} {:>12} {:>12}{}\n",
                i,
                lam,
                self.active_sizes[i],
                cv(&self.cv_mean),
                cv(&self.cv_se),
                mark
            ));
        }
        out
    }
}

/// `n_lambda` log-spaced values from `max` down to `ratio * max`.
pub fn log_grid(max: f64, n_lambda: usize, ratio: f64) -> Result<Vec<f64>> {
    if n_lambda < 2 {
        return Err(GsamError::InvalidArgument("n_lambda must be at least 2".into()));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(GsamError::InvalidArgument(format!("ratio must be in (0, 1), got {ratio}")));
    }
    if !(max > 0.0 && max.is_finite()) {
        return Err(GsamError::DegenerateData(format!("lambda_max is {max}; no path to fit")));
    }
    let step = ratio.ln() / (n_lambda - 1) as f64;
    Ok((0..n_lambda)
        .map(|i| if i == 0 { max } else { max * (step * i as f64).exp() })
        .collect())
}

pub fn lambda_grid(data: &Dataset, loss: LossKind, n_lambda: usize, ratio: f64, omega: Option<f64>) -> Result<Vec<f64>> {
    log_grid(lambda_max_omega(data, loss, omega)?, n_lambda, ratio)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(GsamError::InvalidArgument("empty lambda grid".into()));
    }
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(GsamError::InvalidArgument("lambda grid must be strictly decreasing".into()));
    }
    Ok(())
}

/// Fits every grid value in order, warm-starting from the previous fit.
/// A failure part way stops the path and is recorded in `failure`.
pub fn fit_path(
    data: &Dataset,
    spec: &PenaltySpec,
    loss: LossKind,
    grid: &[f64],
    options: &FitOptions,
    algorithm: Algorithm,
) -> Result<PathResult> {
    check_grid(grid)?;
    let mut models: Vec<AdditiveModel> = Vec::with_capacity(grid.len());
    let mut failure = None;
    for (i, &lambda) in grid.iter().enumerate() {
        match fit(data, loss, spec, lambda, options, algorithm, models.last()) {
            Ok((m, _)) => models.push(m),
            Err(e) if i == 0 => return Err(e),
            Err(e) => {
                failure = Some(PathFailure {
                    index: i,
                    lambda,
                    message: e.to_string(),
                });
                break;
            }
        }
    }
    Ok(PathResult {
        lambdas: grid.to_vec(),
        active_sizes: models.iter().map(|m| m.active_set().len()).collect(),
        objectives: models.iter().map(|m| m.diagnostics.objective).collect(),
        models,
        cv_mean: None,
        cv_se: None,
        selected_lambda_min: None,
        selected_lambda_1se: None,
        selected_index: None,
        failure,
    })
}

/// Fold label of every observation: a seeded shuffle dealt round-robin.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

/// Mean loss of `model` on `data`.
pub fn heldout_loss(model: &AdditiveModel, x: &DMatrix<f64>, y: &[f64]) -> Result<f64> {
    let theta = model.predict(x)?;
    Ok(model.loss.mean_value(y, &theta))
}

/// Path fitted on all rows outside fold `k`, with its held-out losses.
pub fn fold_path(
    data: &Dataset,
    folds: &[usize],
    k: usize,
    spec: &PenaltySpec,
    loss: LossKind,
    grid: &[f64],
    options: &FitOptions,
    algorithm: Algorithm,
) -> Result<(PathResult, Vec<f64>)> {
    let train: Vec<usize> = (0..data.n()).filter(|&i| folds[i] != k).collect();
    let valid: Vec<usize> = (0..data.n()).filter(|&i| folds[i] == k).collect();
    let train_data = data.select_rows(&train).map_err(|e| GsamError::FoldDegenerate {
        fold: k,
        reason: e.to_string(),
    })?;
    if let Err(e) = loss.null_intercept(train_data.y()) {
        return Err(GsamError::FoldDegenerate {
            fold: k,
            reason: e.to_string(),
        });
    }
    let path = fit_path(&train_data, spec, loss, grid, options, algorithm)?;
    if let Some(f) = &path.failure {
        return Err(GsamError::FoldDegenerate {
            fold: k,
            reason: format!("fit failed at lambda {}: {}", f.lambda, f.message),
        });
    }
    let xv = DMatrix::from_fn(valid.len(), data.p(), |r, j| data.x()[(valid[r], j)]);
    let yv: Vec<f64> = valid.iter().map(|&i| data.y()[i]).collect();
    let losses = path
        .models
        .iter()
        .map(|m| heldout_loss(m, &xv, &yv))
        .collect::<Result<Vec<_>>>()?;
    Ok((path, losses))
}

/// Index picked by `rule` from CV means and standard errors.
pub fn select_index(cv_mean: &[f64], cv_se: &[f64], rule: CvRule) -> usize {
    let imin = cv_mean
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v < cv_mean[best] { i } else { best });
    match rule {
        CvRule::Min => imin,
        CvRule::OneSe => {
            let bound = cv_mean[imin] + cv_se[imin];
            cv_mean.iter().position(|v| *v <= bound).unwrap_or(imin)
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn kfold_cv(
    data: &Dataset,
    spec: &PenaltySpec,
    loss: LossKind,
    grid: &[f64],
    k: usize,
    seed: u64,
    rule: CvRule,
    options: &FitOptions,
    algorithm: Algorithm,
) -> Result<PathResult> {
    check_grid(grid)?;
    if k < 2 {
        return Err(GsamError::InvalidArgument("need at least 2 folds".into()));
    }
    if data.n() < 2 * k {
        return Err(GsamError::InvalidArgument(format!(
            "{k}-fold cross-validation needs at least {} observations, got {}",
            2 * k,
            data.n()
        )));
    }
    let folds = fold_assignment(data.n(), k, seed);
    let fold_losses: Vec<Vec<f64>> = (0..k)
        .into_par_iter()
        .map(|fold| fold_path(data, &folds, fold, spec, loss, grid, options, algorithm).map(|(_, l)| l))
        .collect::<Result<_>>()?;
    let nl = grid.len();
    let mut cv_mean = vec![0.0; nl];
    let mut cv_se = vec![0.0; nl];
    for i in 0..nl {
        let vals: Vec<f64> = fold_losses.iter().map(|l| l[i]).collect();
        let mean = vals.iter().sum::<f64>() / k as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        cv_mean[i] = mean;
        cv_se[i] = (var / k as f64).sqrt();
    }
    let mut path = fit_path(data, spec, loss, grid, options, algorithm)?;
    if let Some(f) = &path.failure {
        return Err(GsamError::Solver {
            solver: "full-data path",
            iterations: f.index,
            residual: f.lambda,
        });
    }
    let i_min = select_index(&cv_mean, &cv_se, CvRule::Min);
    let i_1se = select_index(&cv_mean, &cv_se, CvRule::OneSe);
    path.selected_lambda_min = Some(grid[i_min]);
    path.selected_lambda_1se = Some(grid[i_1se]);
    path.selected_index = Some(match rule {
        CvRule::Min => i_min,
        CvRule::OneSe => i_1se,
    });
    path.cv_mean = Some(cv_mean);
    path.cv_se = Some(cv_se);
    Ok(path)
}

/// Picks the path model with the smallest loss on a separate test set.
pub fn select_by_test_error(path: &mut PathResult, test: &Dataset) -> Result<Vec<f64>> {
    let errors = path
        .models
        .iter()
        .map(|m| heldout_loss(m, test.x(), test.y()))
        .collect::<Result<Vec<_>>>()?;
    let best = errors
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v < errors[b] { i } else { b });
    path.selected_index = Some(best);
    Ok(errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_example() {
        let g = log_grid(1.0, 3, 0.01).unwrap();
        assert_eq!(g.len(), 3);
        assert_eq!(g[0], 1.0);
        assert!((g[1] - 0.1).abs() < 1e-15 && (g[2] - 0.01).abs() < 1e-15);
        assert!(log_grid(0.0, 3, 0.01).is_err());
        assert!(log_grid(1.0, 1, 0.01).is_err());
    }

    #[test]
    fn folds_are_balanced_and_seeded() {
        let a = fold_assignment(23, 5, 9);
        assert_eq!(a, fold_assignment(23, 5, 9));
        assert_ne!(a, fold_assignment(23, 5, 10));
        for k in 0..5 {
            let c = a.iter().filter(|&&f| f == k).count();
            assert!(c == 4 || c == 5);
        }
    }

    #[test]
    fn selection_rules() {
        let mean = [5.0, 3.0, 2.2, 2.0, 2.1];
        let se = [0.1, 0.1, 0.1, 0.3, 0.1];
        assert_eq!(select_index(&mean, &se, CvRule::Min), 3);
        assert_eq!(select_index(&mean, &se, CvRule::OneSe), 2);
    }
}
