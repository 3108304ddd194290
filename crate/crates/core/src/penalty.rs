//! Structural penalties and the discrete operators that define them on knots.

use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use crate::error::{GsamError, Result};
use crate::linalg::solve_symmetric_tridiagonal;
use crate::model::{ComponentFit, Interpolation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    Polynomial,
    CubicSpline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

/// Which structural seminorm each component is penalised with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltySpec {
    /// Total variation of the `order`-th discrete derivative, `order` in 0..=2.
    TrendFilter { order: u8 },
    /// `sqrt(int f''^2)` over the natural cubic spline through the knots.
    SobolevSpline,
    /// `int f''^2`, the squared Sobolev seminorm. Not a seminorm; used to
    /// contrast sparsity patterns with [`PenaltySpec::SobolevSpline`].
    SobolevSquared,
    /// Indicator of the span of the constant plus `m` basis functions.
    BasisSubspace { m: usize, family: BasisFamily },
    /// Indicator of monotone functions.
    Isotonic { direction: Direction },
    /// `||D f||_q` for an explicit matrix acting on knot values.
    MatrixSeminorm { d: Vec<Vec<f64>>, q: f64 },
}

impl PenaltySpec {
    /// Parses the command-line names `tf0|tf1|tf2|sobolev|sobolev2|basis:M[:spline]|isotonic[:dec]`.
    pub fn parse(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let mut parts = lower.split(':');
        let head = parts.next().unwrap_or_default();
        let spec = match head {
            "tf0" => PenaltySpec::TrendFilter { order: 0 },
            "tf1" => PenaltySpec::TrendFilter { order: 1 },
            "tf2" => PenaltySpec::TrendFilter { order: 2 },
            "sobolev" | "ssp" => PenaltySpec::SobolevSpline,
            "sobolev2" => PenaltySpec::SobolevSquared,
            "basis" | "spam" => {
                let m = parts
                    .next()
                    .ok_or_else(|| GsamError::InvalidArgument("basis needs a size, e.g. basis:3".into()))?
                    .parse::<usize>()
                    .map_err(|e| GsamError::InvalidArgument(format!("bad basis size: {e}")))?;
                let family = match parts.next() {
                    None | Some("poly") | Some("polynomial") => BasisFamily::Polynomial,
                    Some("spline") | Some("cubic") => BasisFamily::CubicSpline,
                    Some(other) => {
                        return Err(GsamError::InvalidArgument(format!("unknown basis family '{other}'")))
                    }
                };
                PenaltySpec::BasisSubspace { m, family }
            }
            "isotonic" => match parts.next() {
                None | Some("inc") | Some("increasing") => PenaltySpec::Isotonic {
                    direction: Direction::Increasing,
                },
                Some("dec") | Some("decreasing") => PenaltySpec::Isotonic {
                    direction: Direction::Decreasing,
                },
                Some(other) => {
                    return Err(GsamError::InvalidArgument(format!("unknown direction '{other}'")))
                }
            },
            _ => return Err(GsamError::InvalidArgument(format!("unknown penalty '{s}'"))),
        };
        if parts.next().is_some() {
            return Err(GsamError::InvalidArgument(format!("trailing fields in penalty '{s}'")));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PenaltySpec::TrendFilter { order } if *order > 2 => Err(GsamError::Unsupported(format!(
                "trend filtering of order {order}"
            ))),
            PenaltySpec::BasisSubspace { m, .. } if *m == 0 => {
                Err(GsamError::InvalidArgument("basis size must be positive".into()))
            }
            PenaltySpec::MatrixSeminorm { d, q } => {
                if !(*q >= 1.0) {
                    return Err(GsamError::InvalidArgument(format!("q must be >= 1, got {q}")));
                }
                let cols = d.first().map_or(0, |r| r.len());
                if d.iter().any(|r| r.len() != cols) {
                    return Err(GsamError::InvalidArgument("ragged penalty matrix".into()));
                }
                if d.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(GsamError::NonFinite("penalty matrix".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            PenaltySpec::TrendFilter { order } => format!("tf{order}"),
            PenaltySpec::SobolevSpline => "sobolev".into(),
            PenaltySpec::SobolevSquared => "sobolev2".into(),
            PenaltySpec::BasisSubspace { m, family } => match family {
                BasisFamily::Polynomial => format!("basis:{m}"),
                BasisFamily::CubicSpline => format!("basis:{m}:spline"),
            },
            PenaltySpec::Isotonic { direction } => match direction {
                Direction::Increasing => "isotonic".into(),
                Direction::Decreasing => "isotonic:dec".into(),
            },
            PenaltySpec::MatrixSeminorm { q, .. } => format!("matrix:q={q}"),
        }
    }

    /// Convex indicators only satisfy positive homogeneity.
    pub fn is_indicator(&self) -> bool {
        matches!(
            self,
            PenaltySpec::BasisSubspace { .. } | PenaltySpec::Isotonic { .. }
        )
    }

    pub fn default_interpolation(&self) -> Interpolation {
        match self {
            PenaltySpec::TrendFilter { order: 0 } | PenaltySpec::Isotonic { .. } => {
                Interpolation::PiecewiseConstant
            }
            _ => Interpolation::PiecewiseLinear,
        }
    }

    /// Whether adding a constant to a component leaves the penalty unchanged.
    pub fn constants_are_free(&self) -> bool {
        match self {
            PenaltySpec::MatrixSeminorm { d, .. } => d
                .iter()
                .all(|row| row.iter().sum::<f64>().abs() <= 1e-12 * (1.0 + row.iter().map(|v| v.abs()).sum::<f64>())),
            _ => true,
        }
    }
}

/// Rows of a banded operator; row `i` acts on columns `i..i + coeffs[i].len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedRows {
    pub cols: usize,
    pub rows: Vec<Vec<f64>>,
}

impl BandedRows {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn width(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(k, c)| c * f[i + k]).sum())
            .collect()
    }

    pub fn apply_transpose(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, row) in self.rows.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                out[i + k] += c * z[i];
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut full = vec![0.0; self.cols];
                full[i..i + row.len()].copy_from_slice(row);
                full
            })
            .collect()
    }
}

/// Discrete difference operator of the given order on (possibly uneven) knots.
///
/// Order 1 is plain first differences. Higher orders follow the falling
/// factorial recursion `D(j+1) = D(1) diag(j / (x[i+j] - x[i])) D(j)`, so that
/// order 2 measures changes in slope between consecutive segments.
pub fn difference_operator(knots: &[f64], order: usize) -> BandedRows {
    let m = knots.len();
    assert!(order >= 1);
    if m <= order {
        return BandedRows {
            cols: m,
            rows: Vec::new(),
        };
    }
    let mut rows: Vec<Vec<f64>> = (0..m - 1).map(|_| vec![-1.0, 1.0]).collect();
    for j in 1..order {
        rows = scaled_rows(knots, &rows, j)
            .windows(2)
            .map(|pair| {
                let (lo, hi) = (&pair[0], &pair[1]);
                let mut row = vec![0.0; lo.len() + 1];
                for (k, v) in lo.iter().enumerate() {
                    row[k] -= v;
                }
                for (k, v) in hi.iter().enumerate() {
                    row[k + 1] += v;
                }
                row
            })
            .collect();
    }
    BandedRows { cols: m, rows }
}

/// `diag(j / (x[i+j] - x[i])) * D(j)`, the scaled operator whose first
/// differences give `D(j+1)`.
pub fn scaled_difference_operator(knots: &[f64], order: usize) -> BandedRows {
    let d = difference_operator(knots, order);
    BandedRows {
        cols: d.cols,
        rows: scaled_rows(knots, &d.rows, order),
    }
}

fn scaled_rows(knots: &[f64], rows: &[Vec<f64>], j: usize) -> Vec<Vec<f64>> {
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let s = j as f64 / (knots[i + j] - knots[i]);
            row.iter().map(|v| v * s).collect()
        })
        .collect()
}

/// Operator whose l1 norm is the trend-filtering penalty of order `k`.
pub fn trend_operator(knots: &[f64], order: u8) -> BandedRows {
    difference_operator(knots, order as usize + 1)
}

/// Natural cubic spline matrices `Q` (m x (m-2)) and `R` ((m-2) x (m-2)) with
/// `int g''^2 = gamma' R gamma`, `R gamma = Q' f`.
#[derive(Debug, Clone)]
pub struct SplineSystem {
    pub h: Vec<f64>,
    /// Diagonal and off-diagonal of `R`.
    pub r_diag: Vec<f64>,
    pub r_off: Vec<f64>,
}

impl SplineSystem {
    pub fn new(knots: &[f64]) -> Self {
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let m = knots.len();
        let inner = m.saturating_sub(2);
        let r_diag = (0..inner).map(|c| (h[c] + h[c + 1]) / 3.0).collect();
        let r_off = (0..inner.saturating_sub(1)).map(|c| h[c + 1] / 6.0).collect();
        SplineSystem { h, r_diag, r_off }
    }

    pub fn m(&self) -> usize {
        self.h.len() + 1
    }

    pub fn interior(&self) -> usize {
        self.r_diag.len()
    }

    /// Column `c` of `Q` as (first row, three coefficients).
    #[inline]
    pub fn q_column(&self, c: usize) -> [f64; 3] {
        let (a, b) = (1.0 / self.h[c], 1.0 / self.h[c + 1]);
        [a, -a - b, b]
    }

    /// Slope differences, accumulated in double-double since they cancel
    /// for smooth `f` on close knots.
    pub fn qt_mul(&self, f: &[f64]) -> Vec<f64> {
        (0..self.interior())
            .map(|c| {
                let left = (TwoFloat::from(f[c + 1]) - f[c]) / self.h[c];
                let right = (TwoFloat::from(f[c + 2]) - f[c + 1]) / self.h[c + 1];
                f64::from(right - left)
            })
            .collect()
    }

    pub fn q_mul(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        for (c, gc) in g.iter().enumerate() {
            let q = self.q_column(c);
            out[c] += q[0] * gc;
            out[c + 1] += q[1] * gc;
            out[c + 2] += q[2] * gc;
        }
        out
    }

    pub fn r_mul(&self, g: &[f64]) -> Vec<f64> {
        let k = g.len();
        (0..k)
            .map(|c| {
                let mut v = self.r_diag[c] * g[c];
                if c > 0 {
                    v += self.r_off[c - 1] * g[c - 1];
                }
                if c + 1 < k {
                    v += self.r_off[c] * g[c + 1];
                }
                v
            })
            .collect()
    }

    /// Second derivatives of the natural spline at interior knots.
    pub fn second_derivatives(&self, f: &[f64]) -> Result<Vec<f64>> {
        if self.interior() == 0 {
            return Ok(Vec::new());
        }
        solve_symmetric_tridiagonal(&self.r_diag, &self.r_off, &self.qt_mul(f))
    }

    /// `int g''^2` of the natural cubic interpolating spline.
    pub fn roughness(&self, f: &[f64]) -> Result<f64> {
        let gamma = self.second_derivatives(f)?;
        let qtf = self.qt_mul(f);
        Ok(gamma.iter().zip(&qtf).map(|(a, b)| a * b).sum::<f64>().max(0.0))
    }
}

/// Raw basis columns (constant first) evaluated at the knots.
pub fn raw_basis(knots: &[f64], m: usize, family: BasisFamily) -> Vec<Vec<f64>> {
    let lo = knots.first().copied().unwrap_or(0.0);
    let hi = knots.last().copied().unwrap_or(0.0);
    let centre = 0.5 * (lo + hi);
    let half = if hi > lo { 0.5 * (hi - lo) } else { 1.0 };
    let z: Vec<f64> = knots.iter().map(|x| (x - centre) / half).collect();
    let mut cols = vec![vec![1.0; knots.len()]];
    let poly_degree = match family {
        BasisFamily::Polynomial => m,
        BasisFamily::CubicSpline => m.min(3),
    };
    for d in 1..=poly_degree {
        cols.push(z.iter().map(|v| v.powi(d as i32)).collect());
    }
    if family == BasisFamily::CubicSpline && m > 3 {
        let extra = m - 3;
        for l in 1..=extra {
            let q = l as f64 / (extra + 1) as f64;
            let pos = q * (z.len() - 1) as f64;
            let (a, frac) = (pos.floor() as usize, pos.fract());
            let xi = if a + 1 < z.len() {
                z[a] * (1.0 - frac) + z[a + 1] * frac
            } else {
                z[a]
            };
            cols.push(z.iter().map(|v| (v - xi).max(0.0).powi(3)).collect());
        }
    }
    cols
}

/// Gram-Schmidt (applied twice) under the inner product `sum w a b`.
/// Numerically dependent columns are dropped.
pub fn orthonormalize(cols: &[Vec<f64>], weights: &[f64]) -> Vec<Vec<f64>> {
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(weights).map(|((x, y), w)| w * x * y).sum() };
    let mut out: Vec<Vec<f64>> = Vec::new();
    for col in cols {
        let original = dot(col, col).sqrt();
        if original == 0.0 {
            continue;
        }
        let mut v = col.clone();
        for _ in 0..2 {
            for q in &out {
                let c = dot(&v, q);
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-10 * original {
            v.iter_mut().for_each(|a| *a /= norm);
            out.push(v);
        }
    }
    out
}

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        Err(GsamError::NonFinite("component values".into()))
    } else {
        Ok(())
    }
}

/// Penalty of a vector of knot values.
pub fn penalty_of_values(knots: &[f64], values: &[f64], spec: &PenaltySpec) -> Result<f64> {
    check_finite(values)?;
    if knots.len() != values.len() {
        return Err(GsamError::DimensionMismatch {
            expected: knots.len(),
            found: values.len(),
            context: "knots vs values",
        });
    }
    let m = values.len();
    match spec {
        PenaltySpec::TrendFilter { order } => {
            spec.validate()?;
            Ok(trend_operator(knots, *order).apply(values).iter().map(|v| v.abs()).sum())
        }
        PenaltySpec::SobolevSpline => {
            if m < 3 {
                return Ok(0.0);
            }
            Ok(SplineSystem::new(knots).roughness(values)?.sqrt())
        }
        PenaltySpec::SobolevSquared => {
            if m < 3 {
                return Ok(0.0);
            }
            SplineSystem::new(knots).roughness(values)
        }
        PenaltySpec::BasisSubspace { m: size, family } => {
            let unit = vec![1.0; m];
            let basis = orthonormalize(&raw_basis(knots, *size, *family), &unit);
            let mut resid = values.to_vec();
            for q in &basis {
                let c: f64 = resid.iter().zip(q).map(|(a, b)| a * b).sum();
                resid.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
            let scale: f64 = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            let res: f64 = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(if res <= 1e-8 * (1.0 + scale) { 0.0 } else { f64::INFINITY })
        }
        PenaltySpec::Isotonic { direction } => {
            let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            let tol = 1e-12 * (1.0 + scale);
            let ok = values.windows(2).all(|w| match direction {
                Direction::Increasing => w[1] - w[0] >= -tol,
                Direction::Decreasing => w[0] - w[1] >= -tol,
            });
            Ok(if ok { 0.0 } else { f64::INFINITY })
        }
        PenaltySpec::MatrixSeminorm { d, q } => {
            spec.validate()?;
            if d.first().map_or(0, |r| r.len()) != m {
                return Err(GsamError::DimensionMismatch {
                    expected: d.first().map_or(0, |r| r.len()),
                    found: m,
                    context: "penalty matrix columns vs knots",
                });
            }
            let z: Vec<f64> = d
                .iter()
                .map(|row| row.iter().zip(values).map(|(a, b)| a * b).sum())
                .collect();
            Ok(lq_norm(&z, *q))
        }
    }
}

/// `P_st(f)` of a fitted component.
pub fn penalty_value(f: &ComponentFit, spec: &PenaltySpec) -> Result<f64> {
    penalty_of_values(&f.knots, &f.values, spec)
}

pub fn lq_norm(z: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        z.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    } else if q == 1.0 {
        z.iter().map(|v| v.abs()).sum()
    } else if q == 2.0 {
        z.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else {
        z.iter().map(|v| v.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interpolation;

    fn fit(knots: &[f64], values: &[f64]) -> ComponentFit {
        ComponentFit {
            knots: knots.to_vec(),
            values: values.to_vec(),
            interp: Interpolation::PiecewiseLinear,
        }
    }

    #[test]
    fn constant_has_zero_total_variation() {
        let f = fit(&[0.0, 1.0, 2.5], &[4.0, 4.0, 4.0]);
        assert_eq!(penalty_value(&f, &PenaltySpec::TrendFilter { order: 0 }).unwrap(), 0.0);
    }

    #[test]
    fn hat_function_total_variation() {
        let f = fit(&[0.0, 1.0, 2.0], &[0.0, 1.0, 0.0]);
        assert_eq!(penalty_value(&f, &PenaltySpec::TrendFilter { order: 0 }).unwrap(), 2.0);
    }

    #[test]
    fn first_order_trend_is_total_variation_of_slope() {
        let knots = [0.0, 0.5, 2.0, 3.0];
        let values = [0.0, 1.0, 1.0, 3.0];
        // slopes: 2, 0, 2 -> TV = 4
        let v = penalty_value(&fit(&knots, &values), &PenaltySpec::TrendFilter { order: 1 }).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        // linear functions are free
        let lin: Vec<f64> = knots.iter().map(|x| 3.0 * x - 1.0).collect();
        let v = penalty_value(&fit(&knots, &lin), &PenaltySpec::TrendFilter { order: 1 }).unwrap();
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn second_order_trend_annihilates_quadratics() {
        let knots = [0.0, 0.3, 1.1, 1.5, 2.8, 3.0];
        let quad: Vec<f64> = knots.iter().map(|x| x * x - 2.0 * x + 0.5).collect();
        let v = penalty_value(&fit(&knots, &quad), &PenaltySpec::TrendFilter { order: 2 }).unwrap();
        assert!(v.abs() < 1e-10, "{v}");
        // and is the TV of f'' for a piecewise quadratic with one curvature change
        let knots: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let pw: Vec<f64> = knots.iter().map(|&x| if x <= 3.0 { x * x } else { 9.0 + 6.0 * (x - 3.0) }).collect();
        let v = penalty_value(&fit(&knots, &pw), &PenaltySpec::TrendFilter { order: 2 }).unwrap();
        // f'' jumps from 2 to 0, the discrete operator spreads it over two rows
        assert!((v - 2.0).abs() < 1e-10, "{v}");
    }

    #[test]
    fn identity_matrix_seminorm_is_euclidean_norm() {
        let values = [3.0, -4.0, 12.0];
        let d = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        let v = penalty_value(&fit(&[0.0, 1.0, 2.0], &values), &PenaltySpec::MatrixSeminorm { d, q: 2.0 }).unwrap();
        assert!((v - 13.0).abs() < 1e-12);
    }

    #[test]
    fn sobolev_of_linear_is_zero_and_of_parabola_matches_integral() {
        let knots: Vec<f64> = (0..5).map(|i| i as f64 * 0.25).collect();
        let lin: Vec<f64> = knots.iter().map(|x| 1.0 - x).collect();
        assert!(penalty_value(&fit(&knots, &lin), &PenaltySpec::SobolevSpline).unwrap() < 1e-12);
        // Natural spline through a hat: compare against a direct evaluation of
        // the piecewise-linear second derivative integral.
        let vals = [0.0, 0.0, 1.0, 0.0, 0.0];
        let sys = SplineSystem::new(&knots);
        let g = sys.second_derivatives(&vals).unwrap();
        let mut full = vec![0.0];
        full.extend(&g);
        full.push(0.0);
        let mut integral = 0.0;
        for i in 0..4 {
            let (a, b) = (full[i], full[i + 1]);
            integral += 0.25 * (a * a + a * b + b * b) / 3.0;
        }
        let p = penalty_value(&fit(&knots, &vals), &PenaltySpec::SobolevSquared).unwrap();
        assert!((p - integral).abs() < 1e-12);
    }

    #[test]
    fn indicators_report_membership() {
        let knots = [0.0, 1.0, 2.0, 3.0];
        let iso = PenaltySpec::Isotonic { direction: Direction::Increasing };
        assert_eq!(penalty_value(&fit(&knots, &[0.0, 1.0, 1.0, 2.0]), &iso).unwrap(), 0.0);
        assert!(penalty_value(&fit(&knots, &[0.0, 2.0, 1.0, 2.0]), &iso).unwrap().is_infinite());
        let basis = PenaltySpec::BasisSubspace { m: 1, family: BasisFamily::Polynomial };
        assert_eq!(penalty_value(&fit(&knots, &[1.0, 2.0, 3.0, 4.0]), &basis).unwrap(), 0.0);
        assert!(penalty_value(&fit(&knots, &[1.0, 2.0, 0.0, 4.0]), &basis).unwrap().is_infinite());
    }

    #[test]
    fn homogeneity_of_seminorms() {
        let knots = [0.0, 0.4, 0.9, 1.7, 2.0, 2.2];
        let values = [0.3, -1.2, 0.8, 2.0, -0.4, 0.1];
        let specs = [
            PenaltySpec::TrendFilter { order: 0 },
            PenaltySpec::TrendFilter { order: 1 },
            PenaltySpec::TrendFilter { order: 2 },
            PenaltySpec::SobolevSpline,
        ];
        for spec in &specs {
            let base = penalty_of_values(&knots, &values, spec).unwrap();
            for alpha in [-2.0, 0.5, 3.0] {
                let scaled: Vec<f64> = values.iter().map(|v| v * alpha).collect();
                let p = penalty_of_values(&knots, &scaled, spec).unwrap();
                assert!((p - alpha.abs() * base).abs() <= 1e-9 * base.max(1.0));
            }
        }
    }

    #[test]
    fn parse_round_trips_labels() {
        for s in ["tf0", "tf1", "tf2", "sobolev", "sobolev2", "basis:3", "basis:6:spline", "isotonic", "isotonic:dec"] {
            assert_eq!(PenaltySpec::parse(s).unwrap().label(), s);
        }
        assert!(PenaltySpec::parse("tf3").is_err());
        assert!(PenaltySpec::parse("basis").is_err());
        assert!(PenaltySpec::parse("wiggle").is_err());
    }

    #[test]
    fn spline_basis_columns_are_independent() {
        let knots: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin() + i as f64 * 0.1).collect();
        let mut sorted = knots.clone();
        sorted.sort_by(f64::total_cmp);
        let cols = raw_basis(&sorted, 6, BasisFamily::CubicSpline);
        assert_eq!(cols.len(), 7);
        let w = vec![1.0 / 30.0; 30];
        assert_eq!(orthonormalize(&cols, &w).len(), 7);
    }
}
