//! Outer solvers for the additive objective.

mod bcd;
mod proxgrad;

pub use bcd::{bcd_sweep, block_coordinate_fit, block_coordinate_fit_with};
pub use proxgrad::{prox_gradient_fit, prox_gradient_fit_with};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{GsamError, Result};
use crate::losses::LossKind;
use crate::model::{penalty_weights, AdditiveModel, ComponentFit, Diagnostics};
use crate::penalty::{penalty_of_values, PenaltySpec};
use crate::prox::UnivariateProx;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    /// Constant step, no majorization check.
    Fixed { t: f64 },
    /// Start from the previous step (grown by `1/shrink`) and shrink until the
    /// quadratic surrogate majorizes the loss.
    Backtracking { shrink: f64 },
    /// `t = 1 / (L (p_active + 1))`, verified and shrunk on violation.
    ActiveSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    ProxGradient,
    BlockCoordinate,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "prox" | "prox_gradient" | "apg" => Ok(Algorithm::ProxGradient),
            "bcd" | "block_coordinate" => Ok(Algorithm::BlockCoordinate),
            other => Err(GsamError::InvalidArgument(format!("unknown algorithm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Relative objective change at which iteration stops.
    pub rel_tol: f64,
    pub acceleration: bool,
    pub step_policy: StepPolicy,
    pub omega: Option<f64>,
    /// When set, stopping also needs the largest change of a component value
    /// or the intercept over one iteration to be at most this.
    #[serde(default)]
    pub step_tol: Option<f64>,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iter: 2000,
            rel_tol: 1e-7,
            acceleration: true,
            step_policy: StepPolicy::ActiveSet,
            omega: None,
            step_tol: None,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(GsamError::InvalidArgument("rel_tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(GsamError::InvalidArgument("max_iter must be positive".into()));
        }
        match self.step_policy {
            StepPolicy::Fixed { t } if !(t > 0.0 && t.is_finite()) => {
                return Err(GsamError::InvalidArgument(format!("fixed step must be positive, got {t}")))
            }
            StepPolicy::Backtracking { shrink } if !(shrink > 0.0 && shrink < 1.0) => {
                return Err(GsamError::InvalidArgument(format!("shrink must be in (0, 1), got {shrink}")))
            }
            _ => {}
        }
        if let Some(w) = self.omega {
            if !(0.0..=1.0).contains(&w) {
                return Err(GsamError::InvalidArgument(format!("omega must be in [0, 1], got {w}")));
            }
        }
        Ok(())
    }
}

/// Per-iteration record of a fit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    /// Objective after every accepted iteration (sweep for BCD), starting
    /// with the initial point.
    pub objectives: Vec<f64>,
    pub step_sizes: Vec<f64>,
    /// Surrogate minus loss at each accepted step; non-negative when the
    /// quadratic surrogate majorizes.
    pub majorization_gaps: Vec<f64>,
    pub restarts: usize,
    pub backtracks: usize,
}

/// Runs either solver.
pub fn fit(
    data: &Dataset,
    loss: LossKind,
    spec: &PenaltySpec,
    lambda: f64,
    options: &FitOptions,
    algorithm: Algorithm,
    init: Option<&AdditiveModel>,
) -> Result<(AdditiveModel, FitTrace)> {
    match algorithm {
        Algorithm::ProxGradient => prox_gradient_fit_with(data, loss, spec, lambda, options, init),
        Algorithm::BlockCoordinate => {
            if loss != LossKind::Gaussian {
                return Err(GsamError::InvalidArgument(
                    "block coordinate descent supports the gaussian loss only".into(),
                ));
            }
            block_coordinate_fit_with(data, spec, lambda, options, init)
        }
    }
}

/// Intercept plus knot values of every component.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct State {
    pub beta: f64,
    pub f: Vec<Vec<f64>>,
}

impl State {
    /// Largest absolute change of the intercept or any component value.
    pub fn max_change(&self, other: &State) -> f64 {
        self.f
            .iter()
            .zip(&other.f)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(u, v)| (u - v).abs()))
            .fold((self.beta - other.beta).abs(), f64::max)
    }
}

/// Objective and iterate stopping rules combined.
pub(crate) fn should_stop(options: &FitOptions, change: f64, f_cur: f64, step: impl FnOnce() -> f64) -> bool {
    change <= options.rel_tol * f_cur.abs().max(f64::MIN_POSITIVE) && options.step_tol.is_none_or(|tol| step() <= tol)
}

/// Everything the solvers share about one problem instance.
pub(crate) struct Problem<'a> {
    pub data: &'a Dataset,
    pub loss: LossKind,
    pub spec: &'a PenaltySpec,
    pub lambda: f64,
    pub omega: Option<f64>,
    pub w_st: f64,
    pub w_sp: f64,
    pub center: bool,
}

impl<'a> Problem<'a> {
    pub fn new(data: &'a Dataset, loss: LossKind, spec: &'a PenaltySpec, lambda: f64, options: &FitOptions) -> Result<Self> {
        options.validate()?;
        spec.validate()?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(GsamError::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        loss.check_responses(data.y())?;
        if let PenaltySpec::MatrixSeminorm { d, .. } = spec {
            let cols = d.first().map_or(0, |r| r.len());
            if let Some(j) = data.features().iter().position(|f| f.len() != cols) {
                return Err(GsamError::DimensionMismatch {
                    expected: cols,
                    found: data.feature(j).len(),
                    context: "penalty matrix columns vs feature knots",
                });
            }
        }
        let (w_st, w_sp) = penalty_weights(lambda, options.omega);
        Ok(Problem {
            data,
            loss,
            spec,
            lambda,
            omega: options.omega,
            w_st,
            w_sp,
            center: spec.constants_are_free(),
        })
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    pub fn solvers(&self) -> Result<Vec<UnivariateProx>> {
        self.data
            .features()
            .iter()
            .map(|f| UnivariateProx::new(&f.knots, &f.weights, self.spec))
            .collect()
    }

    /// Starting point: the null model, or `init` evaluated on this data's knots.
    pub fn initial_state(&self, init: Option<&AdditiveModel>) -> Result<State> {
        let feats = self.data.features();
        match init {
            None => Ok(State {
                beta: self.loss.null_intercept(self.data.y())?,
                f: feats.iter().map(|f| vec![0.0; f.len()]).collect(),
            }),
            Some(m) => {
                if m.p() != self.p() {
                    return Err(GsamError::DimensionMismatch {
                        expected: self.p(),
                        found: m.p(),
                        context: "warm start components",
                    });
                }
                let mut state = State {
                    beta: m.intercept,
                    f: feats
                        .iter()
                        .zip(&m.components)
                        .map(|(fk, c)| fk.knots.iter().map(|&x| c.eval(x)).collect())
                        .collect(),
                };
                self.center_all(&mut state);
                Ok(state)
            }
        }
    }

    pub fn center_all(&self, state: &mut State) {
        if !self.center {
            return;
        }
        for (j, f) in state.f.iter_mut().enumerate() {
            state.beta += center(f, &self.data.feature(j).weights);
        }
    }

    pub fn theta(&self, state: &State) -> Vec<f64> {
        let mut theta = vec![state.beta; self.data.n()];
        for (j, f) in state.f.iter().enumerate() {
            if f.iter().all(|v| *v == 0.0) {
                continue;
            }
            for (t, &k) in theta.iter_mut().zip(&self.data.feature(j).obs_knot) {
                *t += f[k];
            }
        }
        theta
    }

    /// `w_st P(f) + w_sp ||f||_n` for one component.
    pub fn component_penalty(&self, j: usize, f: &[f64]) -> Result<f64> {
        if f.iter().all(|v| *v == 0.0) {
            return Ok(0.0);
        }
        let fk = self.data.feature(j);
        let st = if self.w_st > 0.0 && !self.spec.is_indicator() {
            self.w_st * penalty_of_values(&fk.knots, f, self.spec)?
        } else {
            0.0
        };
        Ok(st + self.w_sp * fk.norm(f))
    }

    pub fn penalties(&self, state: &State) -> Result<Vec<f64>> {
        state
            .f
            .par_iter()
            .enumerate()
            .map(|(j, f)| self.component_penalty(j, f))
            .collect()
    }

    pub fn objective_parts(&self, state: &State) -> Result<(f64, Vec<f64>)> {
        let theta = self.theta(state);
        let loss = self.loss.mean_value(self.data.y(), &theta);
        Ok((loss, self.penalties(state)?))
    }

    pub fn objective(&self, state: &State) -> Result<f64> {
        let (loss, pens) = self.objective_parts(state)?;
        Ok(loss + pens.iter().sum::<f64>())
    }

    pub fn to_model(&self, state: State, diagnostics: Diagnostics) -> AdditiveModel {
        let interp = self.spec.default_interpolation();
        AdditiveModel {
            intercept: state.beta,
            components: state
                .f
                .into_iter()
                .zip(self.data.features())
                .map(|(values, fk)| ComponentFit {
                    knots: fk.knots.clone(),
                    values,
                    interp,
                })
                .collect(),
            loss: self.loss,
            lambda: self.lambda,
            omega: self.omega,
            penalty: self.spec.clone(),
            feature_names: self.data.feature_names().to_vec(),
            diagnostics,
        }
    }
}

/// Subtracts the weighted mean; returns it.
pub(crate) fn center(f: &mut [f64], weights: &[f64]) -> f64 {
    if f.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let mean: f64 = f.iter().zip(weights).map(|(a, b)| a * b).sum();
    f.iter_mut().for_each(|v| *v -= mean);
    mean
}

/// Smallest `lambda` for which the all-zero model is certified optimal by the
/// sparsity ball alone: `max_j ||grad_j||_n / (1 - omega)`, with `grad_j` the
/// centred knot means of the loss gradient at the intercept-only fit.
///
/// For the gaussian loss this is `2 max_j ||E_j(y - ybar)||_n`, at most
/// `2 ||y - ybar||_n`.
pub fn lambda_max(data: &Dataset, loss: LossKind) -> Result<f64> {
    lambda_max_omega(data, loss, None)
}

pub fn lambda_max_omega(data: &Dataset, loss: LossKind, omega: Option<f64>) -> Result<f64> {
    loss.check_responses(data.y())?;
    let y = data.y();
    let mean_y = data.mean_y();
    if y.iter().all(|v| *v == mean_y) {
        return Ok(0.0);
    }
    let beta = loss.null_intercept(y)?;
    let g: Vec<f64> = y.iter().map(|&yi| loss.grad(yi, beta)).collect();
    let gbar = g.iter().sum::<f64>() / g.len() as f64;
    let best = data
        .features()
        .iter()
        .map(|fk| {
            let gm: Vec<f64> = fk.knot_means(&g).into_iter().map(|v| v - gbar).collect();
            fk.norm(&gm)
        })
        .fold(0.0, f64::max);
    match omega {
        Some(w) if w >= 1.0 => Err(GsamError::InvalidArgument(
            "omega = 1 removes the sparsity penalty; lambda_max is unbounded".into(),
        )),
        Some(w) => Ok(best / (1.0 - w)),
        None => Ok(best),
    }
}

/// Smallest `lambda` (to relative precision `1e-9`, rounded up) at which the
/// intercept-only model is optimal for `spec`. Unlike `lambda_max` this
/// accounts for the structure penalty, so every `lambda` below it gives a
/// non-empty active set.
pub fn lambda_max_exact(data: &Dataset, loss: LossKind, spec: &PenaltySpec, omega: Option<f64>) -> Result<f64> {
    let bound = lambda_max_omega(data, loss, omega)?;
    if bound == 0.0 {
        return Ok(0.0);
    }
    let beta = loss.null_intercept(data.y())?;
    let g: Vec<f64> = data.y().iter().map(|&yi| loss.grad(yi, beta)).collect();
    let gbar = g.iter().sum::<f64>() / g.len() as f64;
    let per_feature: Vec<f64> = data
        .features()
        .par_iter()
        .map(|fk| -> Result<f64> {
            let target: Vec<f64> = fk.knot_means(&g).into_iter().map(|v| gbar - v).collect();
            let mut prox = UnivariateProx::new(&fk.knots, &fk.weights, spec)?;
            let mut is_null = |lambda: f64| -> Result<bool> {
                let (gamma, kappa) = penalty_weights(lambda, omega);
                Ok(prox.composite(&target, gamma, kappa)?.iter().all(|v| *v == 0.0))
            };
            // null-optimality is monotone in lambda
            let (mut lo, mut hi) = (0.0, bound);
            if !is_null(hi)? {
                return Ok(hi);
            }
            while hi - lo > 1e-9 * hi {
                let mid = 0.5 * (lo + hi);
                if is_null(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            Ok(hi)
        })
        .collect::<Result<_>>()?;
    Ok(per_feature.into_iter().fold(0.0, f64::max) * (1.0 + 1e-9))
}

/// Active-set sizes along `grid` for the Sobolev penalty, squared or not.
pub fn sparsity_pattern_probe(
    data: &Dataset,
    loss: LossKind,
    squared: bool,
    grid: &[f64],
    options: &FitOptions,
) -> Result<Vec<usize>> {
    let spec = if squared {
        PenaltySpec::SobolevSquared
    } else {
        PenaltySpec::SobolevSpline
    };
    let algorithm = if loss == LossKind::Gaussian {
        Algorithm::BlockCoordinate
    } else {
        Algorithm::ProxGradient
    };
    let mut sizes = Vec::with_capacity(grid.len());
    let mut warm: Option<AdditiveModel> = None;
    for &lambda in grid {
        let (model, _) = fit(data, loss, &spec, lambda, options, algorithm, warm.as_ref())?;
        sizes.push(model.active_set().len());
        warm = Some(model);
    }
    Ok(sizes)
}
