//! Exponential-family losses `-l(y, theta) = a*y*theta + b(theta)`.
//!
//! Values are the *negative* log-likelihood (up to terms free of `theta`), and
//! [`LossKind::grad`] is its derivative, so the pseudo-residual of the
//! proximal-gradient loop is `r_i = grad(y_i, theta_i)`.

use serde::{Deserialize, Serialize};

use crate::error::{GsamError, Result};

/// Poisson natural parameters are clamped to this range before exponentiation.
pub const POISSON_THETA_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(y - theta)^2`, without the conventional one half.
    Gaussian,
    /// `log(1 + e^theta) - y*theta` for `y` in {0, 1}.
    BernoulliLogit,
    /// `e^theta - y*theta` for `y >= 0`.
    PoissonLog,
}

impl LossKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "gaussian" | "ls" | "least_squares" => Ok(LossKind::Gaussian),
            "logistic" | "bernoulli" | "binomial" => Ok(LossKind::BernoulliLogit),
            "poisson" => Ok(LossKind::PoissonLog),
            other => Err(GsamError::InvalidArgument(format!("unknown loss '{other}'"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Gaussian => "gaussian",
            LossKind::BernoulliLogit => "logistic",
            LossKind::PoissonLog => "poisson",
        }
    }

    /// Coefficient `a` of the linear term in `-l = a*y*theta + b(theta)`.
    pub fn linear_coefficient(&self) -> f64 {
        match self {
            LossKind::Gaussian => -2.0,
            LossKind::BernoulliLogit | LossKind::PoissonLog => -1.0,
        }
    }

    pub fn check_response(&self, y: f64) -> Result<()> {
        match self {
            LossKind::Gaussian => Ok(()),
            LossKind::BernoulliLogit if y == 0.0 || y == 1.0 => Ok(()),
            LossKind::BernoulliLogit => Err(GsamError::InvalidArgument(format!(
                "logistic loss needs responses in {{0, 1}}, got {y}"
            ))),
            LossKind::PoissonLog if y >= 0.0 => Ok(()),
            LossKind::PoissonLog => Err(GsamError::InvalidArgument(format!(
                "poisson loss needs non-negative responses, got {y}"
            ))),
        }
    }

    pub fn check_responses(&self, y: &[f64]) -> Result<()> {
        y.iter().try_for_each(|&v| self.check_response(v))
    }

    /// Loss value; responses are assumed validated.
    #[inline]
    pub fn value(&self, y: f64, theta: f64) -> f64 {
        match self {
            LossKind::Gaussian => (y - theta) * (y - theta),
            LossKind::BernoulliLogit => softplus(theta) - y * theta,
            LossKind::PoissonLog => clamp_theta(theta).exp() - y * theta,
        }
    }

    /// Derivative of [`LossKind::value`] in `theta`.
    #[inline]
    pub fn grad(&self, y: f64, theta: f64) -> f64 {
        match self {
            LossKind::Gaussian => 2.0 * (theta - y),
            LossKind::BernoulliLogit => sigmoid(theta) - y,
            LossKind::PoissonLog => clamp_theta(theta).exp() - y,
        }
    }

    #[inline]
    pub fn second_derivative(&self, theta: f64) -> f64 {
        match self {
            LossKind::Gaussian => 2.0,
            LossKind::BernoulliLogit => {
                let s = sigmoid(theta);
                s * (1.0 - s)
            }
            LossKind::PoissonLog => clamp_theta(theta).exp(),
        }
    }

    /// Global bound on the second derivative, if one exists.
    pub fn curvature_bound(&self) -> Option<f64> {
        match self {
            LossKind::Gaussian => Some(2.0),
            LossKind::BernoulliLogit => Some(0.25),
            LossKind::PoissonLog => None,
        }
    }

    /// Curvature bound valid at the given linear predictors. For the Poisson
    /// loss this is only a local bound; callers must verify majorization.
    pub fn local_curvature_bound(&self, theta: &[f64]) -> f64 {
        match self.curvature_bound() {
            Some(l) => l,
            None => theta
                .iter()
                .map(|&t| clamp_theta(t).exp())
                .fold(f64::MIN_POSITIVE, f64::max),
        }
    }

    /// Linear predictor minimising the mean loss over a constant fit.
    pub fn null_intercept(&self, y: &[f64]) -> Result<f64> {
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        match self {
            LossKind::Gaussian => Ok(mean),
            LossKind::BernoulliLogit => {
                if mean <= 0.0 || mean >= 1.0 {
                    Err(GsamError::DegenerateData(
                        "logistic response is constant".into(),
                    ))
                } else {
                    Ok((mean / (1.0 - mean)).ln())
                }
            }
            LossKind::PoissonLog => {
                if mean <= 0.0 {
                    Err(GsamError::DegenerateData("poisson response is all zero".into()))
                } else {
                    Ok(mean.ln())
                }
            }
        }
    }

    pub fn mean_value(&self, y: &[f64], theta: &[f64]) -> f64 {
        y.iter()
            .zip(theta)
            .map(|(&yi, &ti)| self.value(yi, ti))
            .sum::<f64>()
            / y.len() as f64
    }
}

/// Checked form of [`LossKind::value`].
pub fn loss_value(kind: LossKind, y: f64, theta: f64) -> Result<f64> {
    kind.check_response(y)?;
    if !theta.is_finite() {
        return Err(GsamError::NonFinite("linear predictor".into()));
    }
    Ok(kind.value(y, theta))
}

/// Checked form of [`LossKind::grad`].
pub fn loss_grad(kind: LossKind, y: f64, theta: f64) -> Result<f64> {
    kind.check_response(y)?;
    if !theta.is_finite() {
        return Err(GsamError::NonFinite("linear predictor".into()));
    }
    Ok(kind.grad(y, theta))
}

#[inline]
fn clamp_theta(theta: f64) -> f64 {
    theta.clamp(-POISSON_THETA_CLAMP, POISSON_THETA_CLAMP)
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ALL: [LossKind; 3] = [
        LossKind::Gaussian,
        LossKind::BernoulliLogit,
        LossKind::PoissonLog,
    ];

    fn random_y(kind: LossKind, rng: &mut ChaCha8Rng) -> f64 {
        match kind {
            LossKind::Gaussian => rng.random_range(-3.0..3.0),
            LossKind::BernoulliLogit => f64::from(rng.random_bool(0.5) as u8),
            LossKind::PoissonLog => rng.random_range(0..6) as f64,
        }
    }

    #[test]
    fn reference_values() {
        assert_eq!(loss_value(LossKind::Gaussian, 1.3, 1.3).unwrap(), 0.0);
        let v = loss_value(LossKind::BernoulliLogit, 1.0, 0.0).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(loss_value(LossKind::PoissonLog, 0.0, 0.0).unwrap(), 1.0);
        assert_eq!(loss_grad(LossKind::Gaussian, 1.0, 0.0).unwrap(), -2.0);
    }

    #[test]
    fn response_domain_errors() {
        assert!(loss_value(LossKind::BernoulliLogit, 0.5, 0.0).is_err());
        assert!(loss_value(LossKind::PoissonLog, -1.0, 0.0).is_err());
        assert!(loss_grad(LossKind::BernoulliLogit, 2.0, 0.0).is_err());
        assert!(loss_value(LossKind::Gaussian, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn logistic_curvature_peaks_at_zero() {
        let l = LossKind::BernoulliLogit;
        assert_eq!(l.second_derivative(0.0), 0.25);
        assert_eq!(l.curvature_bound(), Some(0.25));
        for t in [-3.0, -0.5, 0.1, 2.0] {
            assert!(l.second_derivative(t) < 0.25);
        }
    }

    #[test]
    fn gradient_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 1e-5;
        for kind in ALL {
            for _ in 0..100 {
                let y = random_y(kind, &mut rng);
                let t = rng.random_range(-4.0..4.0);
                let fd = (kind.value(y, t + h) - kind.value(y, t - h)) / (2.0 * h);
                assert!(
                    (fd - kind.grad(y, t)).abs() <= 1e-6,
                    "{kind:?} y={y} t={t} fd={fd} grad={}",
                    kind.grad(y, t)
                );
            }
        }
    }

    #[test]
    fn convex_and_curvature_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for kind in ALL {
            for _ in 0..200 {
                let y = random_y(kind, &mut rng);
                let (a, b) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                let s: f64 = rng.random_range(0.01..0.99);
                let mid = kind.value(y, s * a + (1.0 - s) * b);
                let chord = s * kind.value(y, a) + (1.0 - s) * kind.value(y, b);
                assert!(mid <= chord + 1e-12);

                let h = 1e-4;
                let t = a;
                let second =
                    (kind.value(y, t + h) - 2.0 * kind.value(y, t) + kind.value(y, t - h)) / (h * h);
                let bound = kind.local_curvature_bound(&[t - h, t, t + h]);
                assert!(second <= bound * (1.0 + 1e-4) + 1e-6, "{kind:?} {second} {bound}");
            }
        }
    }

    #[test]
    fn decomposes_into_linear_and_free_parts() {
        // -l(y, t) - a*y*t must not depend on y.
        for kind in ALL {
            let a = kind.linear_coefficient();
            for t in [-1.5, 0.0, 0.7] {
                let (y0, y1) = match kind {
                    LossKind::BernoulliLogit => (0.0, 1.0),
                    _ => (1.0, 3.0),
                };
                let b0 = kind.value(y0, t) - a * y0 * t;
                let b1 = kind.value(y1, t) - a * y1 * t;
                let free = if kind == LossKind::Gaussian { y1 * y1 - y0 * y0 } else { 0.0 };
                assert!((b1 - b0 - free).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn poisson_clamps_before_exponentiating() {
        let k = LossKind::PoissonLog;
        assert_eq!(k.grad(0.0, 1000.0), POISSON_THETA_CLAMP.exp());
        assert!(k.value(2.0, 1000.0).is_finite());
    }
}
