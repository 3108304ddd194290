//! Fitted additive models: evaluation, objective and serialization.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{GsamError, Result};
use crate::losses::LossKind;
use crate::penalty::{penalty_value, PenaltySpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Step function; a query takes the value of the largest knot not above it.
    PiecewiseConstant,
    PiecewiseLinear,
}

/// One univariate component, stored as values at sorted distinct knots.
/// Queries outside the knot range are clamped to the boundary values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentFit {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
    pub interp: Interpolation,
}

impl ComponentFit {
    pub fn zero(knots: Vec<f64>, interp: Interpolation) -> Self {
        let values = vec![0.0; knots.len()];
        ComponentFit { knots, values, interp }
    }

    pub fn is_active(&self) -> bool {
        self.values.iter().any(|v| *v != 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.knots.is_empty() || self.knots.len() != self.values.len() {
            return Err(GsamError::DimensionMismatch {
                expected: self.knots.len(),
                found: self.values.len(),
                context: "component knots vs values",
            });
        }
        if self.knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(GsamError::InvalidArgument("component knots must be strictly increasing".into()));
        }
        if self.values.iter().chain(&self.knots).any(|v| !v.is_finite()) {
            return Err(GsamError::NonFinite("component".into()));
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let k = &self.knots;
        let last = k.len() - 1;
        if x <= k[0] {
            return self.values[0];
        }
        if x >= k[last] {
            return self.values[last];
        }
        // k[i] <= x < k[i + 1]
        let i = k.partition_point(|&v| v <= x) - 1;
        match self.interp {
            Interpolation::PiecewiseConstant => self.values[i],
            Interpolation::PiecewiseLinear => {
                let s = (x - k[i]) / (k[i + 1] - k[i]);
                self.values[i] + s * (self.values[i + 1] - self.values[i])
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub iterations: usize,
    pub objective: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditiveModel {
    pub intercept: f64,
    pub components: Vec<ComponentFit>,
    pub loss: LossKind,
    pub lambda: f64,
    pub omega: Option<f64>,
    pub penalty: PenaltySpec,
    #[serde(default)]
    pub feature_names: Vec<String>,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema_version: u32,
    #[serde(flatten)]
    model: AdditiveModel,
}

/// Weights on the structure and sparsity terms: `(lambda^2, lambda)` or the
/// `omega` reweighting `(omega lambda^2, (1 - omega) lambda)`.
pub fn penalty_weights(lambda: f64, omega: Option<f64>) -> (f64, f64) {
    match omega {
        Some(w) => (w * lambda * lambda, (1.0 - w) * lambda),
        None => (lambda * lambda, lambda),
    }
}

/// Root-mean-square of a vector of values at observations.
pub fn empirical_norm(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(GsamError::InvalidArgument("empirical norm of an empty vector".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(GsamError::NonFinite("empirical norm input".into()));
    }
    Ok((values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt())
}

impl AdditiveModel {
    /// Intercept-only model on the knots of `data`.
    pub fn null(data: &Dataset, loss: LossKind, penalty: PenaltySpec, lambda: f64, omega: Option<f64>) -> Result<Self> {
        let interp = penalty.default_interpolation();
        Ok(AdditiveModel {
            intercept: loss.null_intercept(data.y())?,
            components: data
                .features()
                .iter()
                .map(|f| ComponentFit::zero(f.knots.clone(), interp))
                .collect(),
            loss,
            lambda,
            omega,
            penalty,
            feature_names: data.feature_names().to_vec(),
            diagnostics: Diagnostics::default(),
        })
    }

    pub fn p(&self) -> usize {
        self.components.len()
    }

    pub fn active_set(&self) -> Vec<usize> {
        (0..self.p()).filter(|&j| self.components[j].is_active()).collect()
    }

    fn check_p(&self, p: usize) -> Result<()> {
        if p != self.p() {
            return Err(GsamError::DimensionMismatch {
                expected: self.p(),
                found: p,
                context: "model components vs design columns",
            });
        }
        Ok(())
    }

    /// Component `j` evaluated at each row of column `j` of `x`.
    pub fn component_values(&self, j: usize, column: &[f64]) -> Vec<f64> {
        column.iter().map(|&v| self.components[j].eval(v)).collect()
    }

    /// Link-scale predictions `beta + sum_j f_j(x_ij)`.
    pub fn predict(&self, x: &DMatrix<f64>) -> Result<Vec<f64>> {
        self.check_p(x.ncols())?;
        let n = x.nrows();
        let mut out = vec![self.intercept; n];
        for j in 0..self.p() {
            let col = x.column(j);
            for (o, &v) in out.iter_mut().zip(col.iter()) {
                *o += self.components[j].eval(v);
            }
        }
        Ok(out)
    }

    /// Penalised objective on `data`.
    pub fn objective(&self, data: &Dataset) -> Result<f64> {
        self.check_p(data.p())?;
        let theta = self.predict(data.x())?;
        let (w_st, w_sp) = penalty_weights(self.lambda, self.omega);
        let mut total = self.loss.mean_value(data.y(), &theta);
        for j in 0..self.p() {
            let c = &self.components[j];
            if !c.is_active() {
                continue;
            }
            let vals = self.component_values(j, data.column(j));
            total += w_st * penalty_value(c, &self.penalty)? + w_sp * empirical_norm(&vals)?;
        }
        if !total.is_finite() {
            return Err(GsamError::NonFinite("objective".into()));
        }
        Ok(total)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            schema_version: SCHEMA_VERSION,
            model: self.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| GsamError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(s).map_err(|e| GsamError::Serialization(e.to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(GsamError::Serialization(format!(
                "unsupported schema_version {}",
                doc.schema_version
            )));
        }
        for c in &doc.model.components {
            c.validate()?;
        }
        Ok(doc.model)
    }
}
