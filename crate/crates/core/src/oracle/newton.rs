//! Damped Newton on smoothed (or exact, on a fixed subspace) prox objectives.

use nalgebra::{DMatrix, DVector};

use super::{Form, Instance};
use crate::error::{GsamError, Result};

/// `mu` smooths `|z|`, `||z||` and `||f||_n` as `sqrt(. + mu^2)` and weights
/// the log barrier of cone constraints; zero means exact terms and no barrier.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Smoothing {
    mu: f64,
}

impl Smoothing {
    pub fn uniform(mu: f64) -> Self {
        Smoothing { mu }
    }
}

fn eval(inst: &Instance, f: &DVector<f64>, s: Smoothing, derivs: bool) -> (f64, DVector<f64>, DMatrix<f64>) {
    let m = inst.m();
    let mu = s.mu;
    let w = &inst.w;
    let mut val = 0.0;
    let mut g = DVector::zeros(if derivs { m } else { 0 });
    let mut h = DMatrix::zeros(if derivs { m } else { 0 }, if derivs { m } else { 0 });
    for i in 0..m {
        let d = f[i] - inst.r[i];
        val += 0.5 * w[i] * d * d;
        if derivs {
            g[i] = w[i] * d;
            h[(i, i)] = w[i];
        }
    }
    let gamma = inst.gamma;
    match inst.form {
        Form::L1(dm) => {
            if gamma > 0.0 {
                let z = dm * f;
                let mut curv = DVector::zeros(z.len());
                let mut slope = DVector::zeros(z.len());
                for (i, zi) in z.iter().enumerate() {
                    let sq = (zi * zi + mu * mu).sqrt();
                    val += gamma * sq;
                    if sq > 0.0 {
                        slope[i] = gamma * zi / sq;
                        curv[i] = gamma * mu * mu / (sq * sq * sq);
                    }
                }
                if derivs {
                    g += dm.transpose() * slope;
                    if mu > 0.0 {
                        h += dm.transpose() * DMatrix::from_diagonal(&curv) * dm;
                    }
                }
            }
        }
        Form::L2(l) => {
            if gamma > 0.0 && l.nrows() > 0 {
                let z = l * f;
                let sq = (z.norm_squared() + mu * mu).sqrt();
                val += gamma * sq;
                if derivs && sq > 0.0 {
                    let ltz = l.transpose() * &z;
                    g.axpy(gamma / sq, &ltz, 1.0);
                    h += (l.transpose() * l) * (gamma / sq) - &ltz * ltz.transpose() * (gamma / (sq * sq * sq));
                }
            }
        }
        Form::Quadratic(k) => {
            let kf = k * f;
            val += gamma * f.dot(&kf);
            if derivs {
                g.axpy(2.0 * gamma, &kf, 1.0);
                h += k * (2.0 * gamma);
            }
        }
        Form::Cone(a) => {
            if mu > 0.0 && a.nrows() > 0 {
                let z = a * f;
                if z.iter().any(|v| *v <= 0.0) {
                    return (f64::INFINITY, g, h);
                }
                val -= mu * z.iter().map(|v| v.ln()).sum::<f64>();
                if derivs {
                    let inv = z.map(|v| 1.0 / v);
                    g.axpy(-mu, &(a.transpose() * &inv), 1.0);
                    let inv2 = z.map(|v| mu / (v * v));
                    h += a.transpose() * DMatrix::from_diagonal(&inv2) * a;
                }
            }
        }
        Form::Subspace(_) => {}
    }
    if inst.kappa > 0.0 {
        let wf = DVector::from_fn(m, |i, _| w[i] * f[i]);
        let sq = (f.dot(&wf) + mu * mu).sqrt();
        val += inst.kappa * sq;
        if derivs && sq > 0.0 {
            g.axpy(inst.kappa / sq, &wf, 1.0);
            h += DMatrix::from_diagonal(&DVector::from_column_slice(w)) * (inst.kappa / sq)
                - &wf * wf.transpose() * (inst.kappa / (sq * sq * sq));
        }
    }
    (val, g, h)
}

/// Minimises over `f = N z` starting from the projection of `start`.
pub(crate) fn minimize(inst: &Instance, basis: &DMatrix<f64>, start: &[f64], s: Smoothing) -> Result<Vec<f64>> {
    let mut z = basis.transpose() * DVector::from_column_slice(start);
    let mut f = basis * &z;
    let (mut val, _, _) = eval(inst, &f, s, false);
    if !val.is_finite() {
        return Err(GsamError::Oracle("infeasible Newton start".into()));
    }
    let newton = |f: &DVector<f64>| -> (DVector<f64>, DVector<f64>) {
        let (_, g, h) = eval(inst, f, s, true);
        let gz = basis.transpose() * g;
        let hz = basis.transpose() * h * basis;
        let step = match hz.clone().cholesky() {
            Some(ch) => ch.solve(&(-&gz)),
            None => {
                let ridge = 1e-12 * (1.0 + hz.diagonal().amax());
                match (hz + DMatrix::identity(gz.len(), gz.len()) * ridge).cholesky() {
                    Some(ch) => ch.solve(&(-&gz)),
                    None => -gz.clone(),
                }
            }
        };
        (gz, step)
    };
    for _ in 0..300 {
        let (gz, step) = newton(&f);
        let decrement = -gz.dot(&step);
        if !(decrement > 1e-30 * (1.0 + val.abs())) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-14 {
            let z_new = &z + &step * t;
            let f_new = basis * &z_new;
            let (v_new, _, _) = eval(inst, &f_new, s, false);
            if v_new <= val - 1e-4 * t * decrement {
                z = z_new;
                f = f_new;
                val = v_new;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    // Near the optimum objective differences drown in rounding; finish with
    // full steps for as long as the gradient keeps shrinking.
    let (mut gz, mut step) = newton(&f);
    for _ in 0..20 {
        let z_new = &z + &step;
        let f_new = basis * &z_new;
        if !eval(inst, &f_new, s, false).0.is_finite() {
            break;
        }
        let (g_new, step_new) = newton(&f_new);
        if !(g_new.norm() < gz.norm()) {
            break;
        }
        z = z_new;
        f = f_new;
        gz = g_new;
        step = step_new;
    }
    Ok(f.iter().copied().collect())
}
