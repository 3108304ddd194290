//! Synthetic scenarios, noise augmentation and selection metrics.
//!
//! The five scenarios use fixed analytic stand-in signals on [-2.5, 2.5]:
//! scenario 1 is piecewise constant, 2 piecewise linear, 3 smooth, 4 mixes
//! linear, sinusoidal and smooth bumps, 5 mixes a jump with smooth shapes.
//! Each signal is shifted by its numerical mean under U(-2.5, 2.5).

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Normal, Poisson, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{GsamError, Result};
use crate::losses::{sigmoid, LossKind};
use crate::model::AdditiveModel;
use crate::optimizer::{Algorithm, FitOptions};
use crate::path::{fit_path, heldout_loss, kfold_cv, lambda_grid, select_by_test_error, CvRule};
use crate::penalty::PenaltySpec;

pub const LOWER: f64 = -2.5;
pub const UPPER: f64 = 2.5;
pub const SIGNALS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    id: u8,
}

fn raw_signal(id: u8, j: usize, x: f64) -> f64 {
    match (id, j) {
        (1, 0) => {
            if x < -1.0 {
                -1.5
            } else if x < 1.0 {
                0.5
            } else {
                2.0
            }
        }
        (1, 1) => 2.0 * f64::from(u8::from(x > 0.0)),
        (1, 2) => {
            if x < -0.5 {
                -2.0
            } else if x < 1.5 {
                1.5
            } else {
                -1.0
            }
        }
        (1, 3) => {
            if x.abs() < 1.0 {
                1.5
            } else {
                -1.0
            }
        }
        (2, 0) => 1.5 * x.max(0.0),
        (2, 1) => -x,
        (2, 2) => 2.0 - 1.6 * x.abs(),
        (2, 3) => (x + 1.0).clamp(0.0, 2.0),
        (3, 0) => 2.0 * x.sin(),
        (3, 1) => 0.5 * x * x,
        (3, 2) => 3.0 * (-x * x).exp(),
        (3, 3) => 0.4 * x * x * x / 2.5,
        (4, 0) => x,
        (4, 1) => 1.5 * (2.0 * x).sin(),
        (4, 2) => 0.5 * x * x,
        (4, 3) => 2.5 * (-(x - 1.0).powi(2)).exp(),
        (5, 0) => (3.0 * x).sin(),
        (5, 1) => 2.0 * f64::from(u8::from(x > 0.5)),
        (5, 2) => x * x * x / 5.0,
        (5, 3) => 2.0 * (-(x + 1.0).powi(2) * 2.0).exp(),
        _ => 0.0,
    }
}

impl Scenario {
    pub fn new(id: u8) -> Result<Self> {
        if (1..=5).contains(&id) {
            Ok(Scenario { id })
        } else {
            Err(GsamError::InvalidArgument(format!("scenario must be 1..5, got {id}")))
        }
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    /// Mean of signal `j` under the uniform design, by the midpoint rule.
    pub fn centering_constant(&self, j: usize) -> f64 {
        const GRID: usize = 200_000;
        let h = (UPPER - LOWER) / GRID as f64;
        (0..GRID)
            .map(|i| raw_signal(self.id, j, LOWER + (i as f64 + 0.5) * h))
            .sum::<f64>()
            / GRID as f64
    }

    /// Centred signal functions, evaluated once per constant.
    pub fn signals(&self) -> Vec<impl Fn(f64) -> f64> {
        (0..SIGNALS)
            .map(|j| {
                let c = self.centering_constant(j);
                let id = self.id;
                move |x: f64| raw_signal(id, j, x) - c
            })
            .collect()
    }
}

/// Simulated data with the true components at each observation.
#[derive(Debug, Clone)]
pub struct SimData {
    pub data: Dataset,
    /// `truth[j][i]` is the true f_j at row i; zero for noise features.
    pub truth: Vec<Vec<f64>>,
    pub signal: Vec<usize>,
}

impl SimData {
    pub fn truth_total(&self) -> Vec<f64> {
        let n = self.data.n();
        (0..n).map(|i| self.truth.iter().map(|t| t[i]).sum()).collect()
    }
}

pub fn generate(scenario: Scenario, n: usize, p: usize, seed: u64) -> Result<SimData> {
    generate_with_loss(scenario, n, p, seed, LossKind::Gaussian)
}

/// Responses drawn from the loss's model: Gaussian N(eta, 1), Bernoulli with
/// logit eta, or Poisson with log-mean eta / 2 (the truth is scaled to match).
pub fn generate_with_loss(scenario: Scenario, n: usize, p: usize, seed: u64, loss: LossKind) -> Result<SimData> {
    if p < SIGNALS {
        return Err(GsamError::InvalidArgument(format!("need p >= {SIGNALS}, got {p}")));
    }
    if n < 2 {
        return Err(GsamError::InvalidArgument("need n >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif = Uniform::new(LOWER, UPPER).expect("valid range");
    let x = DMatrix::from_fn(n, p, |_, _| unif.sample(&mut rng));
    let scale = if loss == LossKind::PoissonLog { 0.5 } else { 1.0 };
    let signals = scenario.signals();
    let mut truth = vec![vec![0.0; n]; p];
    for (j, f) in signals.iter().enumerate() {
        for i in 0..n {
            truth[j][i] = scale * f(x[(i, j)]);
        }
    }
    let eta: Vec<f64> = (0..n).map(|i| (0..SIGNALS).map(|j| truth[j][i]).sum()).collect();
    let y = draw_response(&eta, loss, &mut rng);
    Ok(SimData {
        data: Dataset::new(y, x, None)?,
        truth,
        signal: (0..SIGNALS).collect(),
    })
}

fn draw_response(eta: &[f64], loss: LossKind, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    eta.iter()
        .map(|&e| match loss {
            LossKind::Gaussian => e + normal.sample(rng),
            LossKind::BernoulliLogit => f64::from(u8::from(Bernoulli::new(sigmoid(e)).expect("probability").sample(rng))),
            LossKind::PoissonLog => Poisson::new(e.exp()).expect("positive mean").sample(rng),
        })
        .collect()
}

/// Pure-noise data: uniform covariates, N(0, 1) response (or the loss's
/// analogue at eta = 0).
pub fn noise_only(n: usize, p: usize, seed: u64, loss: LossKind) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif = Uniform::new(LOWER, UPPER).expect("valid range");
    let x = DMatrix::from_fn(n, p, |_, _| unif.sample(&mut rng));
    let y = draw_response(&vec![0.0; n], loss, &mut rng);
    Dataset::new(y, x, None)
}

/// `n^-1 sum_i (sum_j fhat_j(x_ij) - sum_j f0_j(x_ij))^2`; the intercept is
/// not part of the comparison.
pub fn component_mse(model: &AdditiveModel, x: &DMatrix<f64>, truth: &[Vec<f64>]) -> Result<f64> {
    if model.p() != x.ncols() || truth.len() != x.ncols() {
        return Err(GsamError::DimensionMismatch {
            expected: model.p(),
            found: truth.len().min(x.ncols()),
            context: "component_mse features",
        });
    }
    let n = x.nrows();
    if truth.iter().any(|t| t.len() != n) {
        return Err(GsamError::DimensionMismatch {
            expected: n,
            found: truth.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
            context: "component_mse rows",
        });
    }
    let mut diff = vec![0.0; n];
    for (j, t) in truth.iter().enumerate() {
        let col: Vec<f64> = x.column(j).iter().copied().collect();
        let fitted = model.component_values(j, &col);
        for i in 0..n {
            diff[i] += fitted[i] - t[i];
        }
    }
    Ok(diff.iter().map(|d| d * d).sum::<f64>() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureLabel {
    Original,
    Uniform,
    Permuted { source: usize },
}

impl FeatureLabel {
    pub fn is_signal(&self) -> bool {
        matches!(self, FeatureLabel::Original)
    }
}

/// Appends `n_uniform` U(0, 1) columns and `n_permuted` row-shuffled copies
/// of the original columns (cycled when there are fewer originals).
pub fn augment_with_noise(data: &Dataset, n_uniform: usize, n_permuted: usize, seed: u64) -> Result<(Dataset, Vec<FeatureLabel>)> {
    let (n, p) = (data.n(), data.p());
    if n_permuted > 0 && p == 0 {
        return Err(GsamError::InvalidArgument("no columns to permute".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total = p + n_uniform + n_permuted;
    let mut x = DMatrix::zeros(n, total);
    x.columns_mut(0, p).copy_from(data.x());
    let mut labels = vec![FeatureLabel::Original; p];
    let mut names: Vec<String> = data.feature_names().to_vec();
    for k in 0..n_uniform {
        for i in 0..n {
            x[(i, p + k)] = rng.random::<f64>();
        }
        labels.push(FeatureLabel::Uniform);
        names.push(format!("noise_unif_{}", k + 1));
    }
    for k in 0..n_permuted {
        let source = k % p;
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let col = p + n_uniform + k;
        for (i, &src) in order.iter().enumerate() {
            x[(i, col)] = data.x()[(src, source)];
        }
        labels.push(FeatureLabel::Permuted { source });
        names.push(format!("noise_perm_{}", names[source]));
    }
    Ok((Dataset::new(data.y().to_vec(), x, Some(names))?, labels))
}

/// True and false positive rates of an active set.
pub fn tpr_fpr(active: &[usize], signal: &[bool]) -> (f64, f64) {
    let n_sig = signal.iter().filter(|s| **s).count();
    let n_noise = signal.len() - n_sig;
    let hits = active.iter().filter(|&&j| signal[j]).count();
    let false_hits = active.len() - hits;
    let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    (rate(hits, n_sig), rate(false_hits, n_noise))
}

/// Largest one-sided gap between the empirical CDF and the uniform CDF.
pub fn uniformity_distance(sample: &[f64], lo: f64, hi: f64) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &v)| (i + 1) as f64 / n - ((v - lo) / (hi - lo)).clamp(0.0, 1.0))
        .fold(0.0, f64::max)
}

/// Outcome of one replicate: MSE at the test-selected lambda.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    pub seed: u64,
    pub penalty: String,
    pub n: usize,
    pub lambda: f64,
    pub active: usize,
    pub mse: f64,
}

/// Fits a 50-point path on fresh training data, picks lambda by loss on an
/// independent test sample of the same size and scores the component MSE.
pub fn replicate(scenario: Scenario, n: usize, p: usize, seed: u64, spec: &PenaltySpec, options: &FitOptions) -> Result<Replicate> {
    let train = generate(scenario, n, p, seed)?;
    let test = generate(scenario, n, p, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let grid = lambda_grid(&train.data, LossKind::Gaussian, 50, 1e-3, options.omega)?;
    let mut path = fit_path(&train.data, spec, LossKind::Gaussian, &grid, options, Algorithm::BlockCoordinate)?;
    select_by_test_error(&mut path, &test.data)?;
    let idx = path.selected_index.unwrap_or(0);
    let model = &path.models[idx];
    Ok(Replicate {
        seed,
        penalty: spec.label(),
        n,
        lambda: path.lambdas[idx],
        active: model.active_set().len(),
        mse: component_mse(model, train.data.x(), &train.truth)?,
    })
}

/// Ten-covariate stand-in for a real regression table: every column carries
/// a signal (the four signals of scenarios 4, 3 and 1 in turn) plus N(0, 1)
/// noise.
pub fn analysis_standin(n: usize, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unif = Uniform::new(LOWER, UPPER).expect("valid range");
    let x = DMatrix::from_fn(n, 10, |_, _| unif.sample(&mut rng));
    let sources: Vec<Box<dyn Fn(f64) -> f64>> = [4u8, 3, 1]
        .iter()
        .flat_map(|&id| {
            Scenario { id }
                .signals()
                .into_iter()
                .map(|f| Box::new(f) as Box<dyn Fn(f64) -> f64>)
                .collect::<Vec<_>>()
        })
        .take(10)
        .collect();
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let y = (0..n)
        .map(|i| sources.iter().enumerate().map(|(j, f)| f(x[(i, j)])).sum::<f64>() + normal.sample(&mut rng))
        .collect();
    let names = (1..=10).map(|j| format!("x{j}")).collect();
    Dataset::new(y, x, Some(names))
}

#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub spec: PenaltySpec,
    pub loss: LossKind,
    pub n_uniform: usize,
    pub n_permuted: usize,
    pub train_fraction: f64,
    pub folds: usize,
    pub rule: CvRule,
    pub n_lambda: usize,
    pub ratio: f64,
    pub seed: u64,
    pub options: FitOptions,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            spec: PenaltySpec::TrendFilter { order: 0 },
            loss: LossKind::Gaussian,
            n_uniform: 10,
            n_permuted: 10,
            train_fraction: 0.75,
            folds: 5,
            rule: CvRule::OneSe,
            n_lambda: 50,
            ratio: 1e-3,
            seed: 0,
            options: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub n_train: usize,
    pub n_test: usize,
    pub lambda: f64,
    pub active: Vec<String>,
    pub test_loss: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub model: AdditiveModel,
}

/// Noise augmentation, seeded train/test split, K-fold CV on the training
/// part and scoring of the selected model on the test part.
pub fn analyze(data: &Dataset, cfg: &AnalysisConfig) -> Result<AnalysisReport> {
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(GsamError::InvalidArgument("train fraction must be in (0, 1)".into()));
    }
    let (aug, labels) = augment_with_noise(data, cfg.n_uniform, cfg.n_permuted, cfg.seed)?;
    let mut rows: Vec<usize> = (0..aug.n()).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1)));
    let n_train = ((cfg.train_fraction * aug.n() as f64).round() as usize).clamp(1, aug.n() - 1);
    let train = aug.select_rows(&rows[..n_train])?;
    let test = aug.select_rows(&rows[n_train..])?;
    let grid = lambda_grid(&train, cfg.loss, cfg.n_lambda, cfg.ratio, cfg.options.omega)?;
    let algorithm = if cfg.loss == LossKind::Gaussian {
        Algorithm::BlockCoordinate
    } else {
        Algorithm::ProxGradient
    };
    let path = kfold_cv(&train, &cfg.spec, cfg.loss, &grid, cfg.folds, cfg.seed, cfg.rule, &cfg.options, algorithm)?;
    let idx = path.selected_index.unwrap_or(0);
    let model = path.models[idx].clone();
    let active = model.active_set();
    let signal: Vec<bool> = labels.iter().map(FeatureLabel::is_signal).collect();
    let (tpr, fpr) = tpr_fpr(&active, &signal);
    Ok(AnalysisReport {
        n_train,
        n_test: test.n(),
        lambda: path.lambdas[idx],
        active: active.iter().map(|&j| aug.feature_names()[j].clone()).collect(),
        test_loss: heldout_loss(&model, test.x(), test.y())?,
        tpr,
        fpr,
        model,
    })
}
