//! Block coordinate descent for the least-squares loss.
//!
//! Each block is solved exactly: with `(y - theta)^2` the block problem is
//! twice the prox with `gamma = w_st / 2`, `kappa = w_sp / 2` applied to the
//! centred knot means of the partial residual.

use super::{center, should_stop, FitOptions, FitTrace, Problem, State};
use crate::data::Dataset;
use crate::error::{GsamError, Result};
use crate::losses::LossKind;
use crate::model::{AdditiveModel, Diagnostics};
use crate::penalty::PenaltySpec;
use crate::prox::UnivariateProx;

pub fn block_coordinate_fit(data: &Dataset, spec: &PenaltySpec, lambda: f64, options: &FitOptions) -> Result<AdditiveModel> {
    Ok(block_coordinate_fit_with(data, spec, lambda, options, None)?.0)
}

pub fn block_coordinate_fit_with(
    data: &Dataset,
    spec: &PenaltySpec,
    lambda: f64,
    options: &FitOptions,
    init: Option<&AdditiveModel>,
) -> Result<(AdditiveModel, FitTrace)> {
    let prob = Problem::new(data, LossKind::Gaussian, spec, lambda, options)?;
    let mut solvers = prob.solvers()?;
    let mut state = prob.initial_state(init)?;
    let mut sweeper = Sweeper::new(&prob, &state)?;
    let mut f_cur = sweeper.objective();
    let mut trace = FitTrace {
        objectives: vec![f_cur],
        ..FitTrace::default()
    };
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=options.max_iter {
        iterations = iter;
        let before = state.clone();
        sweeper.sweep(&prob, &mut solvers, &mut state)?;
        let f_new = sweeper.objective();
        if !f_new.is_finite() {
            return Err(GsamError::Divergence {
                iteration: iter,
                value: f_new,
            });
        }
        if options.step_tol.is_none() && f_new > f_cur {
            // a rise can only be rounding in the penalty values; keep the
            // previous iterate
            state = before;
            converged = true;
            break;
        }
        trace.objectives.push(f_new);
        let change = (f_cur - f_new).abs();
        f_cur = f_new;
        if should_stop(options, change, f_cur, || state.max_change(&before)) {
            converged = true;
            break;
        }
    }
    let diag = Diagnostics {
        iterations,
        objective: f_cur,
        converged,
    };
    Ok((prob.to_model(state, diag), trace))
}

/// One additional sweep starting from `model`.
pub fn bcd_sweep(data: &Dataset, model: &AdditiveModel) -> Result<AdditiveModel> {
    let options = FitOptions {
        omega: model.omega,
        ..FitOptions::default()
    };
    let prob = Problem::new(data, LossKind::Gaussian, &model.penalty, model.lambda, &options)?;
    let mut solvers = prob.solvers()?;
    let mut state = prob.initial_state(Some(model))?;
    let mut sweeper = Sweeper::new(&prob, &state)?;
    sweeper.sweep(&prob, &mut solvers, &mut state)?;
    let diag = Diagnostics {
        iterations: 1,
        objective: sweeper.objective(),
        converged: true,
    };
    Ok(prob.to_model(state, diag))
}

/// Running residual and per-block penalties.
struct Sweeper {
    resid: Vec<f64>,
    pens: Vec<f64>,
}

impl Sweeper {
    fn new(prob: &Problem, state: &State) -> Result<Self> {
        let theta = prob.theta(state);
        let resid = prob.data.y().iter().zip(&theta).map(|(a, b)| a - b).collect();
        Ok(Sweeper {
            resid,
            pens: prob.penalties(state)?,
        })
    }

    fn objective(&self) -> f64 {
        let n = self.resid.len() as f64;
        self.resid.iter().map(|r| r * r).sum::<f64>() / n + self.pens.iter().sum::<f64>()
    }

    fn sweep(&mut self, prob: &Problem, solvers: &mut [UnivariateProx], state: &mut State) -> Result<()> {
        let n = self.resid.len() as f64;
        let shift = self.resid.iter().sum::<f64>() / n;
        state.beta += shift;
        self.resid.iter_mut().for_each(|r| *r -= shift);
        let gamma = 0.5 * prob.w_st;
        let kappa = 0.5 * prob.w_sp;
        let total = self.objective().abs().max(f64::MIN_POSITIVE);
        for j in 0..prob.p() {
            let fk = prob.data.feature(j);
            let old = &state.f[j];
            let partial: Vec<f64> = self
                .resid
                .iter()
                .zip(&fk.obs_knot)
                .map(|(r, &k)| r + old[k])
                .collect();
            let mut target = fk.knot_means(&partial);
            if prob.center {
                center(&mut target, &fk.weights);
            }
            let mut new = solvers[j].composite(&target, gamma, kappa)?;
            let shift = if prob.center { center(&mut new, &fk.weights) } else { 0.0 };
            let block = |f: &[f64], pen: f64| -> f64 {
                let d: Vec<f64> = target.iter().zip(f).map(|(a, b)| a - b).collect();
                fk.norm(&d).powi(2) + pen
            };
            let new_pen = prob.component_penalty(j, &new)?;
            let before = block(old, self.pens[j]);
            if block(&new, new_pen) > before + 1e-10 * total {
                // inexact inner solve made things worse; keep the old block
                continue;
            }
            for (r, &k) in self.resid.iter_mut().zip(&fk.obs_knot) {
                *r += old[k] - new[k] - shift;
            }
            state.beta += shift;
            state.f[j] = new;
            self.pens[j] = new_pen;
        }
        Ok(())
    }
}
