//! Small dense constrained least-squares problems.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::roots::brent;

/// Minimum-norm least-squares solution of `a x ~= b`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (1e-13 * smax).max(f64::MIN_POSITIVE);
    svd.solve(b, eps).unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

#[derive(Debug, Clone)]
pub struct BoxLsSolution {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Bound {
    Lower,
    Upper,
    Free,
}

/// Bounded-variable least squares `min ||B x - c||` with `lo <= x <= hi`
/// (infinite bounds allowed), by the Stark-Parker active-set method.
pub fn bvls(b: &DMatrix<f64>, c: &DVector<f64>, lo: &[f64], hi: &[f64]) -> BoxLsSolution {
    let n = b.ncols();
    let mut x = DVector::zeros(n);
    let mut state = vec![Bound::Free; n];
    for i in 0..n {
        x[i] = 0f64.clamp(lo[i], hi[i]);
        if x[i] == lo[i] {
            state[i] = Bound::Lower;
        } else if x[i] == hi[i] {
            state[i] = Bound::Upper;
        }
    }
    let scale = b.norm() * c.norm() + f64::MIN_POSITIVE;
    let gtol = 1e-13 * scale;
    let mut ignored = vec![false; n];
    let max_iter = 20 * n + 100;
    let mut iterations = 0;
    let mut just_freed: Option<usize> = None;
    loop {
        // Inner loop: move free variables towards their unconstrained optimum.
        for _ in 0..(n + 2) {
            iterations += 1;
            let free: Vec<usize> = (0..n).filter(|&i| state[i] == Bound::Free).collect();
            if free.is_empty() {
                break;
            }
            let mut rhs = c.clone();
            for i in 0..n {
                if state[i] != Bound::Free && x[i] != 0.0 {
                    rhs.axpy(-x[i], &b.column(i), 1.0);
                }
            }
            let bf = b.select_columns(&free);
            let z = lstsq(&bf, &rhs);
            let mut alpha = 1.0;
            let mut blocking = Vec::new();
            for (k, &i) in free.iter().enumerate() {
                let (zi, xi) = (z[k], x[i]);
                let step = if zi < lo[i] {
                    (lo[i] - xi) / (zi - xi)
                } else if zi > hi[i] {
                    (hi[i] - xi) / (zi - xi)
                } else {
                    continue;
                };
                let step = step.clamp(0.0, 1.0);
                if step < alpha {
                    alpha = step;
                    blocking.clear();
                }
                if step <= alpha {
                    blocking.push(i);
                }
            }
            for (k, &i) in free.iter().enumerate() {
                x[i] += alpha * (z[k] - x[i]);
            }
            if blocking.is_empty() {
                break;
            }
            for &i in &blocking {
                if z[free.iter().position(|&v| v == i).unwrap()] < lo[i] {
                    x[i] = lo[i];
                    state[i] = Bound::Lower;
                } else {
                    x[i] = hi[i];
                    state[i] = Bound::Upper;
                }
                if Some(i) == just_freed && alpha == 0.0 {
                    ignored[i] = true;
                }
            }
            if alpha > 0.0 {
                ignored.iter_mut().for_each(|v| *v = false);
            }
        }
        let resid = c - b * &x;
        let w = b.transpose() * &resid;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            let gain = match state[i] {
                Bound::Lower if w[i] > gtol => w[i],
                Bound::Upper if w[i] < -gtol => -w[i],
                _ => continue,
            };
            if ignored[i] {
                continue;
            }
            if best.map_or(true, |(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        match best {
            None => {
                return BoxLsSolution {
                    residual: resid.norm(),
                    x,
                    iterations,
                    converged: true,
                }
            }
            Some((i, _)) => {
                state[i] = Bound::Free;
                just_freed = Some(i);
            }
        }
        if iterations > max_iter {
            let resid = c - b * &x;
            return BoxLsSolution {
                residual: resid.norm(),
                x,
                iterations,
                converged: false,
            };
        }
    }
}

/// `min ||B u - c||` subject to `||u||_2 <= radius`.
pub fn ball_ls(b: &DMatrix<f64>, c: &DVector<f64>, radius: f64) -> Result<DVector<f64>> {
    let m = b.ncols();
    if m == 0 || radius <= 0.0 {
        return Ok(DVector::zeros(m));
    }
    let svd = b.clone().svd(true, true);
    let u = svd.u.as_ref().unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let sig = &svd.singular_values;
    let smax = sig.max();
    let keep: Vec<usize> = (0..sig.len()).filter(|&i| sig[i] > 1e-13 * smax).collect();
    let beta: Vec<f64> = keep.iter().map(|&i| u.column(i).dot(c)).collect();
    let coef = |mu: f64| -> Vec<f64> {
        keep.iter()
            .zip(&beta)
            .map(|(&i, bi)| sig[i] * bi / (sig[i] * sig[i] + mu))
            .collect()
    };
    let norm = |cf: &[f64]| cf.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut cf = coef(0.0);
    if norm(&cf) > radius {
        let hi: f64 = keep.iter().zip(&beta).map(|(&i, bi)| (sig[i] * bi).powi(2)).sum::<f64>().sqrt() / radius;
        let root = brent(
            |mu| Ok(1.0 / norm(&coef(mu)).max(f64::MIN_POSITIVE) - 1.0 / radius),
            0.0,
            hi * (1.0 + 1e-12),
            1e-14 / radius,
            1e-15 * hi,
            500,
        )?;
        cf = coef(root.x);
        let nrm = norm(&cf);
        if nrm > radius {
            cf.iter_mut().for_each(|v| *v *= radius / nrm);
        }
    }
    let mut out = DVector::zeros(m);
    for (k, &i) in keep.iter().enumerate() {
        out.axpy(cf[k], &vt.row(i).transpose(), 1.0);
    }
    Ok(out)
}
