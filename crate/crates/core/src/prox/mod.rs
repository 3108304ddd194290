//! Univariate proximal operators.
//!
//! Every operator works on knot values under the weighted norm
//! `||f||_n^2 = sum w_k f_k^2` with multiplicity weights `w` summing to one.
//! The composite operator for seminorms is the structure prox followed by
//! soft-scaling; the squared Sobolev penalty gets its own scalar root find.

pub mod basis;
pub mod fused;
pub mod isotonic;
pub mod matrix;
pub mod spline;
pub mod trend;

use crate::data::weighted_norm;
use crate::error::{GsamError, Result};
use crate::penalty::{Direction, PenaltySpec};

pub use matrix::dual_norm_matrix;
pub use spline::SqrtTrickOutcome;

use basis::BasisProjector;
use matrix::MatrixProx;
use spline::SplineSmoother;
use trend::TrendFilter;

/// `min 1/2 ||r - f||_n^2 + gamma P(f) + kappa ||f||_n` on a set of knots.
#[derive(Debug, Clone)]
pub struct ProxProblem {
    pub knots: Vec<f64>,
    pub r: Vec<f64>,
    pub weights: Vec<f64>,
    pub gamma: f64,
    pub kappa: f64,
    pub spec: PenaltySpec,
}

impl ProxProblem {
    pub fn new(knots: Vec<f64>, r: Vec<f64>, weights: Vec<f64>, gamma: f64, kappa: f64, spec: PenaltySpec) -> Result<Self> {
        let p = ProxProblem {
            knots,
            r,
            weights,
            gamma,
            kappa,
            spec,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        validate_knots(&self.knots, &self.weights)?;
        if self.r.len() != self.knots.len() {
            return Err(GsamError::DimensionMismatch {
                expected: self.knots.len(),
                found: self.r.len(),
                context: "prox targets vs knots",
            });
        }
        if self.r.iter().any(|v| !v.is_finite()) {
            return Err(GsamError::NonFinite("prox targets".into()));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite() && self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(GsamError::InvalidArgument(format!(
                "gamma and kappa must be finite and non-negative (got {}, {})",
                self.gamma, self.kappa
            )));
        }
        self.spec.validate()
    }

    /// Weights rescaled to sum to one.
    pub fn unit_weights(&self) -> Vec<f64> {
        normalize(&self.weights)
    }

    /// The objective being minimised.
    pub fn objective(&self, f: &[f64]) -> Result<f64> {
        let w = self.unit_weights();
        let diff: Vec<f64> = self.r.iter().zip(f).map(|(a, b)| a - b).collect();
        let fit = 0.5 * weighted_norm(&diff, &w).powi(2);
        let pen = if self.gamma > 0.0 {
            self.gamma * crate::penalty::penalty_of_values(&self.knots, f, &self.spec)?
        } else {
            0.0
        };
        Ok(fit + pen + self.kappa * weighted_norm(f, &w))
    }
}

fn validate_knots(knots: &[f64], weights: &[f64]) -> Result<()> {
    if knots.is_empty() {
        return Err(GsamError::InvalidArgument("no knots".into()));
    }
    if weights.len() != knots.len() {
        return Err(GsamError::DimensionMismatch {
            expected: knots.len(),
            found: weights.len(),
            context: "weights vs knots",
        });
    }
    if knots.windows(2).any(|w| !(w[0] < w[1])) || knots.iter().any(|v| !v.is_finite()) {
        return Err(GsamError::InvalidArgument("knots must be finite and strictly increasing".into()));
    }
    if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(GsamError::InvalidArgument("weights must be positive".into()));
    }
    Ok(())
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// `(1 - kappa / ||f||_n)_+ f`. Norms within rounding of `kappa` map to zero.
pub fn soft_scale(f: &[f64], weights: &[f64], kappa: f64) -> Vec<f64> {
    if kappa <= 0.0 {
        return f.to_vec();
    }
    let norm = weighted_norm(f, weights);
    if norm <= kappa * (1.0 + 8.0 * f64::EPSILON) {
        return vec![0.0; f.len()];
    }
    let s = 1.0 - kappa / norm;
    f.iter().map(|v| v * s).collect()
}

#[derive(Debug, Clone)]
enum Kernel {
    Identity,
    Fused,
    Trend(TrendFilter),
    Sobolev { smoother: SplineSmoother, warm: Option<f64> },
    SobolevSquared { smoother: SplineSmoother, warm: Option<f64> },
    Basis(BasisProjector),
    Isotonic(Direction),
    Matrix(MatrixProx),
}

/// Prox solver bound to one feature's knots, carrying warm-start state
/// between calls.
#[derive(Debug, Clone)]
pub struct UnivariateProx {
    weights: Vec<f64>,
    kernel: Kernel,
}

impl UnivariateProx {
    pub fn new(knots: &[f64], weights: &[f64], spec: &PenaltySpec) -> Result<Self> {
        validate_knots(knots, weights)?;
        spec.validate()?;
        let weights = normalize(weights);
        let m = knots.len();
        let kernel = match spec {
            _ if m == 1 => Kernel::Identity,
            PenaltySpec::TrendFilter { order: 0 } => Kernel::Fused,
            PenaltySpec::TrendFilter { order } => Kernel::Trend(TrendFilter::new(knots, &weights, *order as usize)),
            PenaltySpec::SobolevSpline => Kernel::Sobolev {
                smoother: SplineSmoother::new(knots, &weights),
                warm: None,
            },
            PenaltySpec::SobolevSquared => Kernel::SobolevSquared {
                smoother: SplineSmoother::new(knots, &weights),
                warm: None,
            },
            PenaltySpec::BasisSubspace { m, family } => Kernel::Basis(BasisProjector::new(knots, &weights, *m, *family)),
            PenaltySpec::Isotonic { direction } => Kernel::Isotonic(*direction),
            PenaltySpec::MatrixSeminorm { d, q } => Kernel::Matrix(MatrixProx::new(d, *q, &weights)?),
        };
        Ok(UnivariateProx { weights, kernel })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `argmin 1/2 ||r - f||_n^2 + gamma P(f)`.
    pub fn structure(&mut self, r: &[f64], gamma: f64) -> Result<Vec<f64>> {
        let out = match &mut self.kernel {
            Kernel::Identity => r.to_vec(),
            Kernel::Fused => fused::tv_denoise_weighted(r, &self.weights, gamma),
            Kernel::Trend(tf) => tf.solve(r, gamma)?,
            Kernel::Sobolev { smoother, warm } => {
                let out = smoother.sqrt_trick(r, gamma, *warm)?;
                if out.lambda_tilde.is_some() {
                    *warm = out.lambda_tilde;
                }
                out.f
            }
            Kernel::SobolevSquared { smoother, .. } => smoother.smooth(r, 2.0 * gamma)?.0,
            Kernel::Basis(p) => p.project(r),
            Kernel::Isotonic(Direction::Increasing) => isotonic::pava(r, &self.weights),
            Kernel::Isotonic(Direction::Decreasing) => isotonic::antitonic(r, &self.weights),
            Kernel::Matrix(p) => p.solve(r, gamma)?,
        };
        if out.iter().any(|v| !v.is_finite()) {
            return Err(GsamError::NonFinite("prox output".into()));
        }
        Ok(out)
    }

    /// `argmin 1/2 ||r - f||_n^2 + gamma P(f) + kappa ||f||_n`.
    pub fn composite(&mut self, r: &[f64], gamma: f64, kappa: f64) -> Result<Vec<f64>> {
        if let Kernel::SobolevSquared { smoother, warm } = &mut self.kernel {
            let (f, c) = smoother.squared_composite(r, gamma, kappa, *warm)?;
            if c.is_some() {
                *warm = c;
            }
            return Ok(f);
        }
        let tilde = self.structure(r, gamma)?;
        Ok(soft_scale(&tilde, &self.weights, kappa))
    }
}

pub fn prox_structure(problem: &ProxProblem) -> Result<Vec<f64>> {
    problem.validate()?;
    UnivariateProx::new(&problem.knots, &problem.weights, &problem.spec)?.structure(&problem.r, problem.gamma)
}

pub fn prox_composite(problem: &ProxProblem) -> Result<Vec<f64>> {
    problem.validate()?;
    UnivariateProx::new(&problem.knots, &problem.weights, &problem.spec)?.composite(
        &problem.r,
        problem.gamma,
        problem.kappa,
    )
}

/// `min 1/2 ||r - f||_n^2 + lambda1 sqrt(int f''^2)` via smoothing splines.
pub fn sqrt_trick_solve(knots: &[f64], weights: &[f64], r: &[f64], lambda1: f64) -> Result<SqrtTrickOutcome> {
    validate_knots(knots, weights)?;
    if r.len() != knots.len() {
        return Err(GsamError::DimensionMismatch {
            expected: knots.len(),
            found: r.len(),
            context: "targets vs knots",
        });
    }
    SplineSmoother::new(knots, &normalize(weights)).sqrt_trick(r, lambda1, None)
}
