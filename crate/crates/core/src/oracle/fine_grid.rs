//! Function-space check for the Sobolev prox: values on a fine grid whose
//! nodes include every knot, with second divided differences as quadrature
//! for `int f''^2`.

use crate::error::{GsamError, Result};
use crate::linalg::{weighted_linear_fit, BandedSpd};
use crate::roots::{brent, expand_bracket};

struct Grid {
    x: Vec<f64>,
    knot_node: Vec<usize>,
    /// rows of `G` at interior nodes: coefficients on (i-1, i, i+1)
    rows: Vec<[f64; 3]>,
}

impl Grid {
    fn new(knots: &[f64], target: usize) -> Self {
        let span = knots[knots.len() - 1] - knots[0];
        let mut x = vec![knots[0]];
        let mut knot_node = vec![0];
        for w in knots.windows(2) {
            let pieces = ((target as f64 * (w[1] - w[0]) / span).round() as usize).max(2);
            for s in 1..=pieces {
                x.push(if s == pieces { w[1] } else { w[0] + (w[1] - w[0]) * s as f64 / pieces as f64 });
            }
            knot_node.push(x.len() - 1);
        }
        let rows = (1..x.len() - 1)
            .map(|i| {
                let (hl, hr) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let scale = 2.0 / (hl + hr) * (0.5 * (hl + hr)).sqrt();
                [scale / hl, -scale * (1.0 / hl + 1.0 / hr), scale / hr]
            })
            .collect();
        Grid { x, knot_node, rows }
    }

    fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(k, c)| c[0] * f[k] + c[1] * f[k + 1] + c[2] * f[k + 2])
            .collect()
    }

    fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.x.len()];
        for (k, c) in self.rows.iter().enumerate() {
            out[k] += c[0] * z[k];
            out[k + 1] += c[1] * z[k];
            out[k + 2] += c[2] * z[k];
        }
        out
    }
}

struct Problem<'a> {
    grid: Grid,
    r: &'a [f64],
    w: Vec<f64>,
    lambda1: f64,
}

impl Problem<'_> {
    fn value(&self, f: &[f64], mu: f64) -> f64 {
        let fit: f64 = self
            .grid
            .knot_node
            .iter()
            .enumerate()
            .map(|(k, &i)| 0.5 * self.w[k] * (self.r[k] - f[i]).powi(2))
            .sum();
        let z = self.grid.apply(f);
        fit + self.lambda1 * (z.iter().map(|v| v * v).sum::<f64>() + mu * mu).sqrt()
    }

    /// Newton step for the smoothed objective: the Hessian is a banded
    /// matrix minus a rank-one term, inverted by Sherman-Morrison.
    fn newton_step(&self, f: &[f64], mu: f64) -> Result<(Vec<f64>, f64)> {
        let n = f.len();
        let z = self.grid.apply(f);
        let s = (z.iter().map(|v| v * v).sum::<f64>() + mu * mu).sqrt();
        let gtz = self.grid.apply_transpose(&z);
        let mut grad: Vec<f64> = gtz.iter().map(|v| self.lambda1 * v / s).collect();
        let mut a = BandedSpd::zeros(n, 2);
        for (k, &i) in self.grid.knot_node.iter().enumerate() {
            grad[i] += self.w[k] * (f[i] - self.r[k]);
            a.add(i, i, self.w[k]);
        }
        let c = self.lambda1 / s;
        for (k, row) in self.grid.rows.iter().enumerate() {
            for p in 0..3 {
                for q in 0..=p {
                    a.add(k + p, k + q, c * row[p] * row[q]);
                }
            }
        }
        let chol = a.cholesky()?;
        let u: Vec<f64> = gtz.iter().map(|v| v * (self.lambda1 / (s * s * s)).sqrt()).collect();
        let neg: Vec<f64> = grad.iter().map(|v| -v).collect();
        let y = chol.solve(&neg);
        let zz = chol.solve(&u);
        let uy: f64 = u.iter().zip(&y).map(|(a, b)| a * b).sum();
        let uz: f64 = u.iter().zip(&zz).map(|(a, b)| a * b).sum();
        let denom = 1.0 - uz;
        if !(denom > 0.0) {
            return Err(GsamError::Oracle("fine-grid Hessian lost definiteness".into()));
        }
        let step: Vec<f64> = y.iter().zip(&zz).map(|(a, b)| a + b * uy / denom).collect();
        let decrement = -grad.iter().zip(&step).map(|(a, b)| a * b).sum::<f64>();
        Ok((step, decrement))
    }

    /// Minimiser of the fit plus `c/2 ||G f||^2`.
    fn ridge(&self, c: f64) -> Result<Vec<f64>> {
        let n = self.grid.x.len();
        let mut a = BandedSpd::zeros(n, 2);
        let mut b = vec![0.0; n];
        for (k, &i) in self.grid.knot_node.iter().enumerate() {
            a.add(i, i, self.w[k]);
            b[i] = self.w[k] * self.r[k];
        }
        for (k, row) in self.grid.rows.iter().enumerate() {
            for p in 0..3 {
                for q in 0..=p {
                    a.add(k + p, k + q, c * row[p] * row[q]);
                }
            }
        }
        Ok(a.cholesky()?.solve(&b))
    }

    /// The exact problem is the ridge problem whose `c` satisfies
    /// `c ||G f_c|| = lambda1`; `None` when no such `c` exists.
    fn ridge_candidate(&self) -> Result<Option<Vec<f64>>> {
        let phi = |ln_c: f64| -> Result<f64> {
            let c = ln_c.exp();
            let z = self.grid.apply(&self.ridge(c)?);
            Ok(c * z.iter().map(|v| v * v).sum::<f64>().sqrt() - self.lambda1)
        };
        let Ok((lo, hi)) = expand_bracket(phi, -5.0, 5.0, -200.0, 200.0) else {
            return Ok(None);
        };
        let root = brent(phi, lo, hi, 1e-13 * self.lambda1, 1e-14, 300)?;
        Ok(Some(self.ridge(root.x.exp())?))
    }

    fn minimize(&self, f: &mut Vec<f64>, mu: f64) -> Result<()> {
        let mut val = self.value(f, mu);
        for _ in 0..200 {
            let (step, dec) = self.newton_step(f, mu)?;
            if !(dec > 1e-28 * (1.0 + val.abs())) {
                return Ok(());
            }
            let mut t = 1.0;
            loop {
                let cand: Vec<f64> = f.iter().zip(&step).map(|(a, b)| a + t * b).collect();
                let v = self.value(&cand, mu);
                if v <= val - 1e-4 * t * dec {
                    *f = cand;
                    val = v;
                    break;
                }
                t *= 0.5;
                if t < 1e-14 {
                    return Ok(());
                }
            }
        }
        Ok(())
    }
}

/// Minimiser of `1/2 sum w_k (r_k - f(t_k))^2 + lambda1 sqrt(int f''^2)` over
/// grid functions with about `nodes` points, returned at the knots. Weights
/// are normalised to sum to one.
pub fn sobolev_fine_grid(knots: &[f64], weights: &[f64], r: &[f64], lambda1: f64, nodes: usize) -> Result<Vec<f64>> {
    let m = knots.len();
    if m < 3 || r.len() != m || weights.len() != m {
        return Err(GsamError::InvalidArgument("fine-grid oracle needs at least 3 matching knots".into()));
    }
    if knots.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(GsamError::InvalidArgument("knots must be strictly increasing".into()));
    }
    let total: f64 = weights.iter().sum();
    let prob = Problem {
        grid: Grid::new(knots, nodes),
        r,
        w: weights.iter().map(|v| v / total).collect(),
        lambda1,
    };
    // piecewise-linear start through the targets
    let mut f: Vec<f64> = vec![0.0; prob.grid.x.len()];
    for (k, win) in prob.grid.knot_node.windows(2).enumerate() {
        for i in win[0]..=win[1] {
            let t = (prob.grid.x[i] - knots[k]) / (knots[k + 1] - knots[k]);
            f[i] = r[k] * (1.0 - t) + r[k + 1] * t;
        }
    }
    let scale = prob.grid.apply(&f).iter().map(|v| v * v).sum::<f64>().sqrt();
    if scale <= 1e-12 * (1.0 + r.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
        return Ok(r.to_vec());
    }
    let mut mu = scale;
    while mu > 1e-9 * scale {
        // a near-linear optimum makes very small mu numerically singular
        if prob.minimize(&mut f, mu).is_err() {
            break;
        }
        mu *= 0.1;
    }
    let roughness = prob.grid.apply(&f).iter().map(|v| v * v).sum::<f64>().sqrt();
    if roughness > 1e-6 * scale {
        let mut exact = f.clone();
        if prob.minimize(&mut exact, 0.0).is_ok() && prob.value(&exact, 0.0) <= prob.value(&f, 0.0) {
            f = exact;
        }
    }
    // Newton stalls near linear optima, where the seminorm is not smooth
    let line = weighted_linear_fit(knots, r, &prob.w);
    let slope = (line[m - 1] - line[0]) / (knots[m - 1] - knots[0]);
    let linear: Vec<f64> = prob.grid.x.iter().map(|x| line[0] + slope * (x - knots[0])).collect();
    let mut others = vec![linear];
    if let Ok(Some(cand)) = prob.ridge_candidate() {
        others.push(cand);
    }
    for cand in others {
        if prob.value(&cand, 0.0) < prob.value(&f, 0.0) {
            f = cand;
        }
    }
    Ok(prob.grid.knot_node.iter().map(|&i| f[i]).collect())
}
