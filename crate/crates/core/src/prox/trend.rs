//! Trend filtering of order `k >= 1` on uneven knots.
//!
//! `min 1/2 sum w (r - f)^2 + gamma ||D f||_1` with `D = D(k+1)`. The dual is
//! the box QP `min 1/2 u'Au - u'Dr, |u| <= gamma` with banded
//! `A = D W^-1 D'`, solved by a primal-dual active-set iteration. Patterns
//! come from the previous call or from a short ADMM run with banded
//! subproblems (`alpha = E f`, `D = D(1) E`).

use crate::error::{GsamError, Result};
use crate::linalg::{BandedCholesky, BandedSpd};
use crate::penalty::{difference_operator, scaled_difference_operator, BandedRows};
use crate::prox::fused::tv_denoise_weighted;

const PDAS_MAX_ITER: usize = 400;
const ADMM_SEED_ITER: usize = 300;
const ADMM_MAX_ITER: usize = 50_000;
const ADMM_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct TrendFilter {
    order: usize,
    weights: Vec<f64>,
    d: BandedRows,
    e: BandedRows,
    a: BandedSpd,
    pattern: Option<Vec<i8>>,
    admm_factor: Option<(f64, BandedCholesky)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrendMethod {
    Pdas,
    Admm,
}

impl TrendFilter {
    pub fn new(knots: &[f64], weights: &[f64], order: usize) -> Self {
        assert!(order >= 1);
        let d = difference_operator(knots, order + 1);
        let e = scaled_difference_operator(knots, order);
        let rows = d.nrows();
        let bw = order + 1;
        let mut a = BandedSpd::zeros(rows, bw.min(rows.saturating_sub(1)));
        for i in 0..rows {
            for j in i.saturating_sub(bw)..=i {
                // columns shared by rows i and j: i..=j + bw
                let mut s = 0.0;
                for c in i..=(j + bw) {
                    s += d.rows[i][c - i] * d.rows[j][c - j] / weights[c];
                }
                a.add(i, j, s);
            }
        }
        TrendFilter {
            order,
            weights: weights.to_vec(),
            d,
            e,
            a,
            pattern: None,
            admm_factor: None,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn operator(&self) -> &BandedRows {
        &self.d
    }

    pub fn solve(&mut self, r: &[f64], gamma: f64) -> Result<Vec<f64>> {
        Ok(self.solve_with_method(r, gamma)?.0)
    }

    pub fn solve_with_method(&mut self, r: &[f64], gamma: f64) -> Result<(Vec<f64>, TrendMethod)> {
        let m_rows = self.d.nrows();
        if m_rows == 0 || gamma <= 0.0 {
            return Ok((r.to_vec(), TrendMethod::Pdas));
        }
        let b = self.d.apply(r);
        if let Some(p) = self.pattern.clone() {
            if p.len() == m_rows {
                if let Some((u, p)) = self.pdas(&b, gamma, p) {
                    self.pattern = Some(p);
                    return Ok((self.primal(r, &u), TrendMethod::Pdas));
                }
            }
        }
        let (_, seed) = self.admm(r, gamma, ADMM_SEED_ITER, 1e-6)?;
        if let Some((u, p)) = self.pdas(&b, gamma, seed) {
            self.pattern = Some(p);
            return Ok((self.primal(r, &u), TrendMethod::Pdas));
        }
        let (f, pattern) = self.admm(r, gamma, ADMM_MAX_ITER, ADMM_TOL)?;
        self.pattern = Some(pattern);
        Ok((f, TrendMethod::Admm))
    }

    fn primal(&self, r: &[f64], u: &[f64]) -> Vec<f64> {
        let dtu = self.d.apply_transpose(u);
        r.iter()
            .zip(&dtu)
            .zip(&self.weights)
            .map(|((ri, di), wi)| ri - di / wi)
            .collect()
    }

    /// Dual active-set iteration from `pattern` (+1 upper, -1 lower, 0 free).
    fn pdas(&self, b: &[f64], gamma: f64, mut pattern: Vec<i8>) -> Option<(Vec<f64>, Vec<i8>)> {
        let m = b.len();
        let bw = self.a.bandwidth();
        let bscale = b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let ascale = (0..m).map(|i| self.a.get(i, i)).fold(0.0f64, f64::max);
        let gtol = 1e-12 * (bscale + gamma * ascale * (2 * bw + 1) as f64);
        let utol = 1e-12 * gamma;
        let mut best_count = usize::MAX;
        let mut stall = 0;
        let mut u = vec![0.0; m];
        for _ in 0..PDAS_MAX_ITER {
            let free: Vec<usize> = (0..m).filter(|&i| pattern[i] == 0).collect();
            for i in 0..m {
                u[i] = gamma * f64::from(pattern[i]);
            }
            if !free.is_empty() {
                let au = self.a.mul_vec(&u);
                let mut sub = BandedSpd::zeros(free.len(), bw.min(free.len() - 1));
                for (ia, &i) in free.iter().enumerate() {
                    for ib in ia.saturating_sub(bw)..=ia {
                        let j = free[ib];
                        if i - j <= bw {
                            sub.add(ia, ib, self.a.get(i, j));
                        }
                    }
                }
                let rhs: Vec<f64> = free.iter().map(|&i| b[i] - au[i]).collect();
                let sol = sub.cholesky().ok()?.solve(&rhs);
                for (k, &i) in free.iter().enumerate() {
                    u[i] = sol[k];
                }
            }
            let au = self.a.mul_vec(&u);
            let mut violators = Vec::new();
            for i in 0..m {
                let g = au[i] - b[i];
                let bad = match pattern[i] {
                    0 => u[i].abs() > gamma + utol,
                    1 => g > gtol,
                    _ => g < -gtol,
                };
                if bad {
                    violators.push(i);
                }
            }
            if violators.is_empty() {
                for v in u.iter_mut() {
                    *v = v.clamp(-gamma, gamma);
                }
                return Some((u, pattern));
            }
            if violators.len() < best_count {
                best_count = violators.len();
                stall = 0;
            } else {
                stall += 1;
            }
            let flip: Vec<usize> = if stall > 3 {
                vec![*violators.last().unwrap()]
            } else {
                violators
            };
            for i in flip {
                pattern[i] = if pattern[i] == 0 {
                    if u[i] > 0.0 {
                        1
                    } else {
                        -1
                    }
                } else {
                    0
                };
            }
        }
        None
    }

    /// Scaled-form ADMM on `alpha = E f`. Returns the primal iterate and the
    /// sign pattern of `D(1) alpha`.
    fn admm(&mut self, r: &[f64], gamma: f64, max_iter: usize, tol: f64) -> Result<(Vec<f64>, Vec<i8>)> {
        let m = r.len();
        let rows = self.e.nrows();
        let row_norm = self
            .e
            .rows
            .iter()
            .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
            .sum::<f64>()
            / rows as f64;
        let rho = gamma / row_norm;
        let refactor = match &self.admm_factor {
            Some((old, _)) => *old != rho,
            None => true,
        };
        if refactor {
            let bw = self.order;
            let mut sys = BandedSpd::zeros(m, bw);
            for (c, w) in self.weights.iter().enumerate() {
                sys.add(c, c, *w);
            }
            for (i, row) in self.e.rows.iter().enumerate() {
                for (ka, va) in row.iter().enumerate() {
                    for (kb, vb) in row.iter().enumerate().take(ka + 1) {
                        sys.add(i + ka, i + kb, rho * va * vb);
                    }
                }
            }
            self.admm_factor = Some((rho, sys.cholesky()?));
        }
        let (_, chol) = self.admm_factor.as_ref().unwrap();
        let wr: Vec<f64> = r.iter().zip(&self.weights).map(|(a, b)| a * b).collect();
        let mut f = r.to_vec();
        let mut alpha = self.e.apply(&f);
        let mut u = vec![0.0; rows];
        let ones = vec![1.0; rows];
        let scale = 1.0 + alpha.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut converged = false;
        let mut last_res = f64::INFINITY;
        for _ in 0..max_iter {
            let target: Vec<f64> = alpha.iter().zip(&u).map(|(a, b)| a + b).collect();
            let et = self.e.apply_transpose(&target);
            let mut rhs: Vec<f64> = wr.iter().zip(&et).map(|(a, b)| a + rho * b).collect();
            chol.solve_in_place(&mut rhs);
            f = rhs;
            let ef = self.e.apply(&f);
            let v: Vec<f64> = ef.iter().zip(&u).map(|(a, b)| a - b).collect();
            let new_alpha = tv_denoise_weighted(&v, &ones, gamma / rho);
            let mut primal = 0.0;
            for i in 0..rows {
                let d = new_alpha[i] - ef[i];
                u[i] += d;
                primal += d * d;
            }
            let delta: Vec<f64> = new_alpha.iter().zip(&alpha).map(|(a, b)| a - b).collect();
            let dual = rho * self.e.apply_transpose(&delta).iter().map(|v| v * v).sum::<f64>().sqrt();
            alpha = new_alpha;
            last_res = primal.sqrt().max(dual / rho);
            if last_res <= tol * scale {
                converged = true;
                break;
            }
        }
        if !converged && max_iter >= ADMM_MAX_ITER {
            return Err(GsamError::Solver {
                solver: "trend-filter admm",
                iterations: max_iter,
                residual: last_res,
            });
        }
        let pattern = alpha
            .windows(2)
            .map(|w| {
                let d = w[1] - w[0];
                if d > 0.0 {
                    1
                } else if d < 0.0 {
                    -1
                } else {
                    0
                }
            })
            .collect();
        Ok((f, pattern))
    }
}
