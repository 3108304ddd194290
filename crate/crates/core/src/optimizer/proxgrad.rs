//! Accelerated proximal gradient with verified majorization.

use rayon::prelude::*;

use super::{center, should_stop, FitOptions, FitTrace, Problem, State, StepPolicy};
use crate::data::Dataset;
use crate::error::{GsamError, Result};
use crate::losses::LossKind;
use crate::model::{AdditiveModel, Diagnostics};
use crate::penalty::PenaltySpec;
use crate::prox::UnivariateProx;

/// Fits with proximal gradient from the intercept-only model.
pub fn prox_gradient_fit(
    data: &Dataset,
    loss: LossKind,
    spec: &PenaltySpec,
    lambda: f64,
    options: &FitOptions,
) -> Result<AdditiveModel> {
    Ok(prox_gradient_fit_with(data, loss, spec, lambda, options, None)?.0)
}

struct Step {
    state: State,
    loss: f64,
    t: f64,
    gap: f64,
}

pub fn prox_gradient_fit_with(
    data: &Dataset,
    loss: LossKind,
    spec: &PenaltySpec,
    lambda: f64,
    options: &FitOptions,
    init: Option<&AdditiveModel>,
) -> Result<(AdditiveModel, FitTrace)> {
    let prob = Problem::new(data, loss, spec, lambda, options)?;
    let mut solvers = prob.solvers()?;
    let mut x = prob.initial_state(init)?;
    let mut x_prev = x.clone();
    let mut f_cur = prob.objective(&x)?;
    if !f_cur.is_finite() {
        return Err(GsamError::Divergence { iteration: 0, value: f_cur });
    }
    let mut trace = FitTrace {
        objectives: vec![f_cur],
        ..FitTrace::default()
    };
    let mut momentum = 1.0f64;
    let mut noisy = false;
    let mut coef = 0.0;
    let mut t_prev: Option<f64> = None;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 1..=options.max_iter {
        iterations = iter;
        let accelerated = options.acceleration && coef > 0.0;
        let y = if accelerated { extrapolate(&x, &x_prev, coef) } else { x.clone() };
        let mut step = prox_step(&prob, &mut solvers, &y, options.step_policy, t_prev, &mut trace)?;
        let mut f_new = step.loss + prob.penalties(&step.state)?.iter().sum::<f64>();
        if accelerated && !(f_new <= f_cur) {
            // function-value restart: drop momentum and step from x
            trace.restarts += 1;
            momentum = 1.0;
            step = prox_step(&prob, &mut solvers, &x, options.step_policy, t_prev, &mut trace)?;
            f_new = step.loss + prob.penalties(&step.state)?.iter().sum::<f64>();
        }
        if !f_new.is_finite() {
            return Err(GsamError::Divergence {
                iteration: iter,
                value: f_new,
            });
        }
        if options.step_tol.is_none() && f_new > f_cur + 1e-13 * f_cur.abs() {
            // even a plain step makes no progress: stalled at rounding level
            converged = true;
            break;
        }
        t_prev = Some(step.t);
        trace.step_sizes.push(step.t);
        trace.majorization_gaps.push(step.gap);
        trace.objectives.push(f_new);
        x_prev = std::mem::replace(&mut x, step.state);
        if f_new > f_cur && options.step_tol.is_some() {
            // objective differences are rounding noise now; take plain steps
            // until the iterates settle
            noisy = true;
        }
        if noisy {
            momentum = 1.0;
        }
        let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        coef = (momentum - 1.0) / next;
        momentum = next;
        let change = if noisy { 0.0 } else { (f_cur - f_new).abs() };
        f_cur = f_new;
        if should_stop(options, change, f_cur, || x.max_change(&x_prev)) {
            converged = true;
            break;
        }
    }
    let diag = Diagnostics {
        iterations,
        objective: f_cur,
        converged,
    };
    Ok((prob.to_model(x, diag), trace))
}

fn extrapolate(x: &State, prev: &State, coef: f64) -> State {
    State {
        beta: x.beta + coef * (x.beta - prev.beta),
        f: x.f
            .iter()
            .zip(&prev.f)
            .map(|(a, b)| a.iter().zip(b).map(|(u, v)| u + coef * (u - v)).collect())
            .collect(),
    }
}

/// One proximal step from `y`, shrinking `t` until the quadratic surrogate
/// majorizes the loss (except under a fixed step).
fn prox_step(
    prob: &Problem,
    solvers: &mut [UnivariateProx],
    y: &State,
    policy: StepPolicy,
    t_prev: Option<f64>,
    trace: &mut FitTrace,
) -> Result<Step> {
    let data = prob.data;
    let theta = prob.theta(y);
    let yv = data.y();
    let n = data.n() as f64;
    let g: Vec<f64> = yv.iter().zip(&theta).map(|(&a, &b)| prob.loss.grad(a, b)).collect();
    let loss_y = prob.loss.mean_value(yv, &theta);
    let gbar = g.iter().sum::<f64>() / n;
    let grads: Vec<Vec<f64>> = data
        .features()
        .par_iter()
        .map(|fk| {
            let mut gm = fk.knot_means(&g);
            if prob.center {
                gm.iter_mut().for_each(|v| *v -= gbar);
            }
            gm
        })
        .collect();
    let curvature = prob.loss.local_curvature_bound(&theta);
    let active = y.f.iter().filter(|f| f.iter().any(|v| *v != 0.0)).count();
    let mut t = match policy {
        StepPolicy::Fixed { t } => t,
        StepPolicy::ActiveSet => 1.0 / (curvature * (active + 1) as f64),
        StepPolicy::Backtracking { shrink } => match t_prev {
            Some(tp) => (tp / shrink).min(1.0 / curvature),
            None => 1.0 / curvature,
        },
    };
    let shrink = match policy {
        StepPolicy::Backtracking { shrink } => shrink,
        _ => 0.5,
    };
    let tol = 1e-12 * (1.0 + loss_y.abs());
    loop {
        let gamma = t * prob.w_st;
        let kappa = t * prob.w_sp;
        let new_f: Vec<Vec<f64>> = solvers
            .par_iter_mut()
            .zip(y.f.par_iter())
            .zip(grads.par_iter())
            .map(|((solver, fy), gj)| {
                let target: Vec<f64> = fy.iter().zip(gj).map(|(a, b)| a - t * b).collect();
                solver.composite(&target, gamma, kappa)
            })
            .collect::<Result<_>>()?;
        let mut state = State {
            beta: y.beta - t * gbar,
            f: new_f,
        };
        if prob.center {
            for (j, f) in state.f.iter_mut().enumerate() {
                state.beta += center(f, &data.feature(j).weights);
            }
        }
        let theta_new = prob.theta(&state);
        let loss_new = prob.loss.mean_value(yv, &theta_new);
        let lin: f64 = g.iter().zip(&theta_new).zip(&theta).map(|((gi, a), b)| gi * (a - b)).sum::<f64>() / n;
        let mut quad = (state.beta - y.beta).powi(2);
        let mut changed = 0;
        for (j, (a, b)) in state.f.iter().zip(&y.f).enumerate() {
            let d: Vec<f64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
            let nd = data.feature(j).norm(&d);
            if nd > 0.0 {
                changed += 1;
            }
            quad += nd * nd;
        }
        let surrogate = loss_y + lin + quad / (2.0 * t);
        let gap = surrogate - loss_new;
        let fixed = matches!(policy, StepPolicy::Fixed { .. });
        if fixed || gap >= -tol {
            return Ok(Step {
                state,
                loss: loss_new,
                t,
                gap,
            });
        }
        trace.backtracks += 1;
        let next = match policy {
            StepPolicy::ActiveSet => (t * shrink).min(1.0 / (curvature * (changed + 1) as f64)),
            _ => t * shrink,
        };
        t = next;
        if t < 1e-300 {
            return Err(GsamError::Solver {
                solver: "step-size backtracking",
                iterations: trace.backtracks,
                residual: gap,
            });
        }
    }
}
