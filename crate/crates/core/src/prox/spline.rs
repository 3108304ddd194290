//! Natural cubic smoothing splines and the square-root reduction that turns
//! them into solvers for the (unsquared) Sobolev seminorm.

use crate::data::weighted_norm;
use crate::error::{GsamError, Result};
use crate::linalg::{weighted_linear_fit, BandedCholesky, BandedSpd};
use crate::penalty::SplineSystem;
use crate::roots::{brent, expand_bracket};
use twofloat::TwoFloat;

/// Relative tolerance on `2 lt P(f_lt) = lambda1` in the root find.
pub const SQRT_TRICK_RTOL: f64 = 1e-10;

const REFINE_MAX_STEPS: usize = 30;

#[derive(Debug, Clone)]
pub struct SplineSmoother {
    knots: Vec<f64>,
    weights: Vec<f64>,
    sys: SplineSystem,
    // Q' W^-1 Q stored as its three upper diagonals.
    m0: Vec<f64>,
    m1: Vec<f64>,
    m2: Vec<f64>,
    qtq: Option<BandedCholesky>,
}

/// Result of a square-root-trick solve.
#[derive(Debug, Clone)]
pub struct SqrtTrickOutcome {
    pub f: Vec<f64>,
    /// Penalty level of the squared problem; `None` on the null branch.
    pub lambda_tilde: Option<f64>,
    /// `2 lt P(f)`, which should equal `lambda1` off the null branch.
    pub stationarity: f64,
    pub null_branch: bool,
    /// Dual seminorm of `r - f_null`.
    pub dual_norm: f64,
}

impl SplineSmoother {
    pub fn new(knots: &[f64], weights: &[f64]) -> Self {
        let sys = SplineSystem::new(knots);
        let k = sys.interior();
        let (mut m0, mut m1, mut m2) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
        for c in 0..k {
            let qc = sys.q_column(c);
            m0[c] = (0..3).map(|t| qc[t] * qc[t] / weights[c + t]).sum();
            if c + 1 < k {
                let qd = sys.q_column(c + 1);
                m1[c] = qc[1] * qd[0] / weights[c + 1] + qc[2] * qd[1] / weights[c + 2];
            }
            if c + 2 < k {
                let qd = sys.q_column(c + 2);
                m2[c] = qc[2] * qd[0] / weights[c + 2];
            }
        }
        SplineSmoother {
            knots: knots.to_vec(),
            weights: weights.to_vec(),
            sys,
            m0,
            m1,
            m2,
            qtq: None,
        }
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    fn interior(&self) -> usize {
        self.sys.interior()
    }

    /// Minimiser of `sum w (r - f)^2 + alpha int f''^2` and its second
    /// derivatives at interior knots.
    pub fn smooth(&self, r: &[f64], alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let (f, u) = self.smooth_scaled(r, alpha)?;
        Ok((f, u.into_iter().map(|v| v / alpha).collect()))
    }

    /// Like `smooth` but returns `alpha` times the second derivatives, solved
    /// as `(R / alpha + Q' W^-1 Q) u = Q' r`, which stays accurate for large
    /// `alpha`.
    fn smooth_scaled(&self, r: &[f64], alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let k = self.interior();
        if k == 0 || alpha == 0.0 {
            return Ok((r.to_vec(), vec![0.0; k]));
        }
        let mut a = BandedSpd::zeros(k, 2);
        for c in 0..k {
            a.add(c, c, self.sys.r_diag[c] / alpha + self.m0[c]);
            if c + 1 < k {
                a.add(c + 1, c, self.sys.r_off[c] / alpha + self.m1[c]);
            }
            if c + 2 < k {
                a.add(c + 2, c, self.m2[c]);
            }
        }
        let chol = a.cholesky()?;
        let mut u = chol.solve(&self.sys.qt_mul(r));
        // Close knots make this system badly conditioned although f is not;
        // refine against a residual formed from Q and R in double-double
        // until the correction reaches rounding level or stops shrinking.
        let (mut f, mut res) = self.residual(r, alpha, &u);
        let mut last = f64::INFINITY;
        for _ in 0..REFINE_MAX_STEPS {
            let step = chol.solve(&res);
            let size = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(size < last) {
                break;
            }
            last = size;
            for (a, b) in u.iter_mut().zip(&step) {
                *a += b;
            }
            (f, res) = self.residual(r, alpha, &u);
            if size <= 4.0 * f64::EPSILON * u.iter().fold(0.0f64, |m, v| m.max(v.abs())) {
                break;
            }
        }
        Ok((f, u))
    }

    /// `f = r - W^-1 Q u` and `Q' f - R u / alpha`, accumulated in
    /// double-double.
    fn residual(&self, r: &[f64], alpha: f64, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = &self.sys.h;
        let one = TwoFloat::from(1.0);
        let col = |c: usize| {
            let (a, b) = (one / h[c], one / h[c + 1]);
            [a, -(a + b), b]
        };
        let mut qu = vec![TwoFloat::from(0.0); r.len()];
        for (c, uc) in u.iter().enumerate() {
            for (t, q) in col(c).iter().enumerate() {
                qu[c + t] += *q * *uc;
            }
        }
        let f: Vec<TwoFloat> = r.iter().zip(&qu).zip(&self.weights).map(|((ri, q), wi)| *ri - *q / *wi).collect();
        let k = u.len();
        let res = (0..k)
            .map(|c| {
                let q = col(c);
                let mut v = q[0] * f[c] + q[1] * f[c + 1] + q[2] * f[c + 2];
                let mut ru = (TwoFloat::from(h[c]) + h[c + 1]) / 3.0 * u[c];
                if c > 0 {
                    ru += TwoFloat::from(h[c]) / 6.0 * u[c - 1];
                }
                if c + 1 < k {
                    ru += TwoFloat::from(h[c + 1]) / 6.0 * u[c + 1];
                }
                v -= ru / alpha;
                f64::from(v)
            })
            .collect();
        (f.into_iter().map(f64::from).collect(), res)
    }

    /// `sqrt(int f''^2)` from second derivatives.
    pub fn seminorm_from_second(&self, g: &[f64]) -> f64 {
        let rg = self.sys.r_mul(g);
        g.iter().zip(&rg).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt()
    }

    pub fn null_fit(&self, r: &[f64]) -> Vec<f64> {
        weighted_linear_fit(&self.knots, r, &self.weights)
    }

    /// Dual seminorm `sup <v, f>_n / P(f)` of a vector orthogonal (in the
    /// weighted inner product) to linear functions.
    pub fn dual_norm(&mut self, v: &[f64]) -> Result<f64> {
        let k = self.interior();
        if k == 0 {
            return Ok(0.0);
        }
        if self.qtq.is_none() {
            let mut a = BandedSpd::zeros(k, 2);
            for c in 0..k {
                let qc = self.sys.q_column(c);
                a.add(c, c, qc.iter().map(|x| x * x).sum());
                if c + 1 < k {
                    let qd = self.sys.q_column(c + 1);
                    a.add(c + 1, c, qc[1] * qd[0] + qc[2] * qd[1]);
                }
                if c + 2 < k {
                    let qd = self.sys.q_column(c + 2);
                    a.add(c + 2, c, qc[2] * qd[0]);
                }
            }
            self.qtq = Some(a.cholesky()?);
        }
        let wv: Vec<f64> = v.iter().zip(&self.weights).map(|(a, b)| a * b).collect();
        let coef = self.qtq.as_ref().unwrap().solve(&self.sys.qt_mul(&wv));
        Ok(self.seminorm_from_second(&coef))
    }

    /// Solves `min 1/2 ||r - f||_n^2 + lambda1 sqrt(int f''^2)` through a
    /// sequence of smoothing-spline solves.
    pub fn sqrt_trick(&mut self, r: &[f64], lambda1: f64, warm: Option<f64>) -> Result<SqrtTrickOutcome> {
        if self.interior() == 0 || lambda1 <= 0.0 {
            return Ok(SqrtTrickOutcome {
                f: r.to_vec(),
                lambda_tilde: None,
                stationarity: 0.0,
                null_branch: self.interior() == 0,
                dual_norm: 0.0,
            });
        }
        let f_null = self.null_fit(r);
        let resid: Vec<f64> = r.iter().zip(&f_null).map(|(a, b)| a - b).collect();
        let dual = self.dual_norm(&resid)?;
        if lambda1 >= dual {
            return Ok(SqrtTrickOutcome {
                f: f_null,
                lambda_tilde: None,
                stationarity: dual,
                null_branch: true,
                dual_norm: dual,
            });
        }
        let phi = |lt: f64| -> Result<f64> {
            let (_, u) = self.smooth_scaled(r, 2.0 * lt)?;
            Ok(self.seminorm_from_second(&u) - lambda1)
        };
        let (lo, hi) = match warm {
            Some(lt) if lt.is_finite() && lt > 0.0 => (lt / 2.0, lt * 2.0),
            _ => (1e-12, 1e12),
        };
        let (lo, hi) = expand_bracket(phi, lo, hi, 1e-300, 1e300)?;
        // phi flattens near the null branch while f still moves, so the root
        // is pinned down in lt, not in phi
        let root = brent(|s: f64| phi(s.exp()), lo.ln(), hi.ln(), 1e-6 * SQRT_TRICK_RTOL * lambda1, 1e-13, 300)?;
        let lt = root.x.exp();
        let (f, u) = self.smooth_scaled(r, 2.0 * lt)?;
        let stationarity = self.seminorm_from_second(&u);
        if (stationarity - lambda1).abs() > 1e-8 * lambda1 {
            return Err(GsamError::Solver {
                solver: "sqrt-trick root find",
                iterations: root.evaluations,
                residual: (stationarity - lambda1).abs() / lambda1,
            });
        }
        Ok(SqrtTrickOutcome {
            f,
            lambda_tilde: Some(lt),
            stationarity,
            null_branch: false,
            dual_norm: dual,
        })
    }

    /// Composite prox for the squared seminorm:
    /// `min 1/2 ||r - f||_n^2 + gamma int f''^2 + kappa ||f||_n`.
    /// Returns the result and the scale multiplier `c = kappa / ||f||_n`.
    pub fn squared_composite(&self, r: &[f64], gamma: f64, kappa: f64, warm: Option<f64>) -> Result<(Vec<f64>, Option<f64>)> {
        if kappa <= 0.0 {
            return Ok((self.smooth(r, 2.0 * gamma)?.0, None));
        }
        let rn = weighted_norm(r, &self.weights);
        if rn <= kappa * (1.0 + 8.0 * f64::EPSILON) {
            return Ok((vec![0.0; r.len()], None));
        }
        let fit = |c: f64| -> Result<Vec<f64>> {
            let (f, _) = self.smooth(r, 2.0 * gamma / (1.0 + c))?;
            Ok(f.into_iter().map(|v| v / (1.0 + c)).collect())
        };
        let h = |c: f64| -> Result<f64> { Ok(c * weighted_norm(&fit(c)?, &self.weights) - kappa) };
        let (lo, hi) = match warm {
            Some(c) if c.is_finite() && c > 0.0 => (c / 2.0, c * 2.0),
            _ => (1e-6, 1.0),
        };
        let (lo, hi) = expand_bracket(h, lo, hi, 1e-300, 1e300)?;
        let root = brent(|s: f64| h(s.exp()), lo.ln(), hi.ln(), 1e-13 * kappa, 1e-15, 300)?;
        let c = root.x.exp();
        Ok((fit(c)?, Some(c)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::SplineSystem;

    fn setup() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let knots: Vec<f64> = (0..12).map(|i| i as f64 * 0.3 + (i as f64 * 1.7).sin() * 0.1).collect();
        let w: Vec<f64> = (0..12).map(|i| 1.0 + (i % 3) as f64).collect();
        let tw: f64 = w.iter().sum();
        let w = w.into_iter().map(|v| v / tw).collect();
        let r: Vec<f64> = knots.iter().map(|x| (2.0 * x).sin() + 0.1 * x * x).collect();
        (knots, w, r)
    }

    #[test]
    fn smoothing_spline_is_stationary() {
        // gradient of sum w (r - f)^2 + alpha f' K f vanishes
        let (knots, w, r) = setup();
        let s = SplineSmoother::new(&knots, &w);
        let alpha = 0.01;
        let (f, g) = s.smooth(&r, alpha).unwrap();
        let sys = SplineSystem::new(&knots);
        let qg = sys.q_mul(&g);
        for i in 0..r.len() {
            let grad = 2.0 * w[i] * (f[i] - r[i]) + 2.0 * alpha * qg[i];
            assert!(grad.abs() < 1e-12, "{grad}");
        }
        // g really are the spline's second derivatives
        let g2 = sys.second_derivatives(&f).unwrap();
        for (a, b) in g.iter().zip(&g2) {
            assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn linear_input_is_returned_on_null_branch() {
        let (knots, w, _) = setup();
        let r: Vec<f64> = knots.iter().map(|x| 0.5 - 2.0 * x).collect();
        let mut s = SplineSmoother::new(&knots, &w);
        for lam in [1e-6, 0.1, 10.0] {
            let out = s.sqrt_trick(&r, lam, None).unwrap();
            assert!(out.null_branch);
            for (a, b) in out.f.iter().zip(&r) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sqrt_trick_hits_stationarity() {
        let (knots, w, r) = setup();
        let mut s = SplineSmoother::new(&knots, &w);
        let fnull = s.null_fit(&r);
        let resid: Vec<f64> = r.iter().zip(&fnull).map(|(a, b)| a - b).collect();
        let dual = s.dual_norm(&resid).unwrap();
        for frac in [1e-4, 0.01, 0.3, 0.9, 0.999] {
            let out = s.sqrt_trick(&r, frac * dual, None).unwrap();
            assert!(!out.null_branch);
            assert!((out.stationarity - frac * dual).abs() <= 1e-10 * frac * dual);
        }
    }

    #[test]
    fn near_duplicate_knots_still_converge() {
        let mut knots: Vec<f64> = (0..300).map(|i| -2.5 + 5.0 * i as f64 / 299.0).collect();
        knots.insert(151, knots[150] + 1e-6);
        knots.insert(40, knots[39] + 3e-7);
        let m = knots.len();
        let w = vec![1.0 / m as f64; m];
        let r: Vec<f64> = knots.iter().enumerate().map(|(i, x)| x * x + 0.3 * ((i * 37 % 11) as f64 / 11.0 - 0.5)).collect();
        let mut s = SplineSmoother::new(&knots, &w);
        let fnull = s.null_fit(&r);
        let resid: Vec<f64> = r.iter().zip(&fnull).map(|(a, b)| a - b).collect();
        let dual = s.dual_norm(&resid).unwrap();
        let mut warm = None;
        for frac in [0.5, 0.3, 0.1, 0.03] {
            let out = s.sqrt_trick(&r, frac * dual, warm).unwrap();
            assert!((out.stationarity - frac * dual).abs() <= 1e-10 * frac * dual);
            warm = out.lambda_tilde;
        }
    }

    #[test]
    fn squared_composite_scale_equation_holds() {
        let (knots, w, r) = setup();
        let s = SplineSmoother::new(&knots, &w);
        let (f, c) = s.squared_composite(&r, 0.02, 0.1, None).unwrap();
        let c = c.unwrap();
        let fnorm = weighted_norm(&f, &w);
        assert!((c * fnorm - 0.1).abs() < 1e-12);
        let (zero, _) = s.squared_composite(&r, 0.02, 100.0, None).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }
}
