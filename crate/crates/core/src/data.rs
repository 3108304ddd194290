//! Training data and the per-feature knot structure every solver works on.

use nalgebra::DMatrix;

use crate::error::{GsamError, Result};

/// Distinct sorted values of one covariate together with their multiplicities.
///
/// Tied observations share a knot; `weights` are the multiplicities divided by
/// `n`, so the empirical norm of a knot vector `f` is `sqrt(sum w_k f_k^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureKnots {
    pub knots: Vec<f64>,
    pub counts: Vec<f64>,
    pub weights: Vec<f64>,
    /// Knot index of every observation.
    pub obs_knot: Vec<usize>,
}

impl FeatureKnots {
    pub fn from_column(column: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..column.len()).collect();
        order.sort_by(|&a, &b| column[a].total_cmp(&column[b]));
        Self::from_sorted_order(column, &order)
    }

    fn from_sorted_order(column: &[f64], order: &[usize]) -> Self {
        let n = column.len();
        let mut knots = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        let mut obs_knot = vec![0; n];
        for &i in order {
            let v = column[i];
            if knots.last().map_or(true, |&last| v > last) {
                knots.push(v);
                counts.push(0.0);
            }
            let k = knots.len() - 1;
            counts[k] += 1.0;
            obs_knot[i] = k;
        }
        let weights = counts.iter().map(|c| c / n as f64).collect();
        FeatureKnots {
            knots,
            counts,
            weights,
            obs_knot,
        }
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Averages an observation-level vector within each knot.
    pub fn knot_means(&self, obs: &[f64]) -> Vec<f64> {
        let mut sums = vec![0.0; self.knots.len()];
        for (i, &k) in self.obs_knot.iter().enumerate() {
            sums[k] += obs[i];
        }
        for (s, c) in sums.iter_mut().zip(&self.counts) {
            *s /= c;
        }
        sums
    }

    /// Expands knot values back to the observations.
    pub fn expand(&self, values: &[f64]) -> Vec<f64> {
        self.obs_knot.iter().map(|&k| values[k]).collect()
    }

    /// Weighted mean of knot values, i.e. the mean over observations.
    pub fn mean(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn norm(&self, values: &[f64]) -> f64 {
        weighted_norm(values, &self.weights)
    }
}

/// `sqrt(sum w_k v_k^2)` for weights that already sum to one.
pub fn weighted_norm(values: &[f64], weights: &[f64]) -> f64 {
    values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * v * v)
        .sum::<f64>()
        .sqrt()
}

/// Responses plus an `n x p` design.
#[derive(Debug, Clone)]
pub struct Dataset {
    y: Vec<f64>,
    x: DMatrix<f64>,
    sort_index: Vec<Vec<usize>>,
    feature_names: Vec<String>,
    features: Vec<FeatureKnots>,
}

impl Dataset {
    pub fn new(y: Vec<f64>, x: DMatrix<f64>, feature_names: Option<Vec<String>>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(GsamError::InvalidArgument(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if x.nrows() != n {
            return Err(GsamError::DimensionMismatch {
                expected: n,
                found: x.nrows(),
                context: "design rows vs response length",
            });
        }
        let p = x.ncols();
        if p == 0 {
            return Err(GsamError::InvalidArgument("design has no columns".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(GsamError::NonFinite("response".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(GsamError::NonFinite("design matrix".into()));
        }
        let feature_names = match feature_names {
            Some(names) if names.len() != p => {
                return Err(GsamError::DimensionMismatch {
                    expected: p,
                    found: names.len(),
                    context: "feature names",
                })
            }
            Some(names) => names,
            None => (0..p).map(|j| format!("x{}", j + 1)).collect(),
        };
        let mut sort_index = Vec::with_capacity(p);
        let mut features = Vec::with_capacity(p);
        for j in 0..p {
            let col = x.column(j);
            let col = col.as_slice();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
            features.push(FeatureKnots::from_sorted_order(col, &order));
            sort_index.push(order);
        }
        Ok(Dataset {
            y,
            x,
            sort_index,
            feature_names,
            features,
        })
    }

    /// Builds a dataset from row-major feature rows.
    pub fn from_rows(y: Vec<f64>, rows: &[Vec<f64>], feature_names: Option<Vec<String>>) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(GsamError::DimensionMismatch {
                expected: p,
                found: rows[bad].len(),
                context: "row length",
            });
        }
        let x = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Dataset::new(y, x, feature_names)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.x.as_slice()[j * n..(j + 1) * n]
    }

    pub fn sort_index(&self, j: usize) -> &[usize] {
        &self.sort_index[j]
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature(&self, j: usize) -> &FeatureKnots {
        &self.features[j]
    }

    pub fn features(&self) -> &[FeatureKnots] {
        &self.features
    }

    pub fn mean_y(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.n() as f64
    }

    /// Subset of rows, keeping column names.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let y = rows.iter().map(|&i| self.y[i]).collect();
        let x = DMatrix::from_fn(rows.len(), self.p(), |r, j| self.x[(rows[r], j)]);
        Dataset::new(y, x, Some(self.feature_names.clone()))
    }

    /// Same design, different response.
    pub fn with_response(&self, y: Vec<f64>) -> Result<Dataset> {
        Dataset::new(y, self.x.clone(), Some(self.feature_names.clone()))
    }

    /// Column-permuted copy; `order[j]` is the source column of new column `j`.
    pub fn permute_columns(&self, order: &[usize]) -> Result<Dataset> {
        let x = DMatrix::from_fn(self.n(), order.len(), |i, j| self.x[(i, order[j])]);
        let names = order.iter().map(|&j| self.feature_names[j].clone()).collect();
        Dataset::new(self.y.clone(), x, Some(names))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_share_a_knot() {
        let fk = FeatureKnots::from_column(&[3.0, 1.0, 3.0, 2.0]);
        assert_eq!(fk.knots, vec![1.0, 2.0, 3.0]);
        assert_eq!(fk.counts, vec![1.0, 1.0, 2.0]);
        assert_eq!(fk.obs_knot, vec![2, 0, 2, 1]);
        assert_eq!(fk.knot_means(&[1.0, 5.0, 3.0, 7.0]), vec![5.0, 7.0, 2.0]);
        assert!((fk.weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sort_index_sorts_each_column() {
        let rows = vec![vec![0.5, 2.0], vec![-1.0, 1.0], vec![0.0, 3.0]];
        let d = Dataset::from_rows(vec![1.0, 2.0, 3.0], &rows, None).unwrap();
        for j in 0..d.p() {
            let col = d.column(j);
            let sorted: Vec<f64> = d.sort_index(j).iter().map(|&i| col[i]).collect();
            assert!(sorted.windows(2).all(|w| w[0] <= w[1]));
        }
        assert_eq!(d.feature_names(), &["x1".to_string(), "x2".to_string()]);
    }

    #[test]
    fn rejects_bad_input() {
        let rows = vec![vec![0.0]];
        assert!(Dataset::from_rows(vec![1.0], &rows, None).is_err());
        let rows = vec![vec![0.0], vec![f64::NAN]];
        assert!(matches!(
            Dataset::from_rows(vec![1.0, 2.0], &rows, None),
            Err(GsamError::NonFinite(_))
        ));
        let rows = vec![vec![0.0], vec![1.0]];
        assert!(Dataset::from_rows(vec![1.0, 2.0, 3.0], &rows, None).is_err());
    }
}
