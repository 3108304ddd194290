mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gsam::{Algorithm, CvRule, GsamError, LossKind, PenaltySpec};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{file}:{line}: {message}")]
    Parse { file: String, line: u64, message: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] GsamError),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "gsam", version, about = "Fit sparse additive models with structured univariate penalties")]
struct Cli {
    /// Worker threads for folds, replicates and per-feature work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit at one lambda and write the model as JSON.
    Fit(FitArgs),
    /// Evaluate a fitted model on a CSV file.
    Predict(PredictArgs),
    /// Fit a warm-started path over a lambda grid.
    Path(PathArgs),
    /// K-fold cross-validation over a lambda grid.
    Cv(CvArgs),
    /// Simulation study on the built-in scenarios.
    Simulate(SimulateArgs),
    /// Smallest lambda at which every component is zero.
    LambdaMax(LambdaMaxArgs),
    /// Active-set sizes along a grid for the Sobolev penalty, squared or not.
    SparsityProbe(ProbeArgs),
    /// Noise augmentation, train/test split, CV and scoring of a data set.
    Analyze(AnalyzeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column; all other columns are features.
    #[arg(long)]
    response: String,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    Prox,
    Bcd,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    /// tf0|tf1|tf2|sobolev|sobolev2|basis:M[:spline]|isotonic[:dec]
    #[arg(long, default_value = "tf0", value_parser = parse_penalty)]
    penalty: PenaltySpec,
    #[arg(long, default_value = "gaussian", value_parser = parse_loss)]
    loss: LossKind,
    /// Reweight the penalties as (omega lambda^2, (1 - omega) lambda).
    #[arg(long)]
    omega: Option<f64>,
    /// Solver; block coordinate descent needs the gaussian loss. Default: bcd
    /// for gaussian, prox otherwise.
    #[arg(long, value_enum)]
    algo: Option<AlgoArg>,
    #[arg(long, default_value_t = 2000)]
    max_iter: usize,
    /// Relative objective change at which iterations stop.
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    /// Disable momentum in the proximal gradient solver.
    #[arg(long)]
    no_acceleration: bool,
}

impl SolverArgs {
    fn algorithm(&self) -> Algorithm {
        match self.algo {
            Some(AlgoArg::Prox) => Algorithm::ProxGradient,
            Some(AlgoArg::Bcd) => Algorithm::BlockCoordinate,
            None if self.loss == LossKind::Gaussian => Algorithm::BlockCoordinate,
            None => Algorithm::ProxGradient,
        }
    }

    fn options(&self) -> gsam::FitOptions {
        gsam::FitOptions {
            max_iter: self.max_iter,
            rel_tol: self.tol,
            acceleration: !self.no_acceleration,
            omega: self.omega,
            ..gsam::FitOptions::default()
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct GridArgs {
    /// Number of log-spaced lambda values from lambda_max down.
    #[arg(long, default_value_t = 50)]
    n_lambda: usize,
    /// Smallest lambda as a fraction of lambda_max.
    #[arg(long, default_value_t = 1e-3)]
    ratio: f64,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    lambda: f64,
    /// Model JSON destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Long-format CSV of (feature, x, fitted) at every knot.
    #[arg(long)]
    dump_components: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    /// CSV holding the model's feature columns (matched by name).
    #[arg(long)]
    data: PathBuf,
    /// Response column; when given the mean loss is reported.
    #[arg(long)]
    response: Option<String>,
    /// Prediction CSV destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PathArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// PathResult JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// min or 1se
    #[arg(long, default_value = "1se", value_parser = parse_rule)]
    rule: CvRule,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// PathResult JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Components of the selected model as long-format CSV.
    #[arg(long)]
    dump_components: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum SelectArg {
    /// Loss on an independent test sample of the same size.
    Test,
    /// K-fold cross-validation with the 1se rule.
    Cv,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    scenario: u8,
    /// Training sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "200")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 6)]
    p: usize,
    #[arg(long, default_value_t = 25)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Penalties to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "tf0,basis:3", value_parser = parse_penalty)]
    penalty: Vec<PenaltySpec>,
    #[arg(long, value_enum, default_value = "test")]
    select: SelectArg,
    /// Folds when selecting by cross-validation.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Per-replicate CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct LambdaMaxArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "gaussian", value_parser = parse_loss)]
    loss: LossKind,
    #[arg(long)]
    omega: Option<f64>,
    /// Also report the exact threshold for this penalty.
    #[arg(long, value_parser = parse_penalty)]
    penalty: Option<PenaltySpec>,
}

#[derive(Args, Debug)]
pub struct ProbeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "gaussian", value_parser = parse_loss)]
    loss: LossKind,
    /// Use the squared Sobolev penalty instead of the seminorm.
    #[arg(long)]
    squared: bool,
    #[command(flatten)]
    grid: GridArgs,
    /// CSV of (lambda, active) rows.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// CSV input; omit to use a synthetic ten-covariate stand-in.
    #[arg(long, requires = "response")]
    data: Option<PathBuf>,
    #[arg(long)]
    response: Option<String>,
    /// Rows of the synthetic stand-in.
    #[arg(long, default_value_t = 506)]
    standin_n: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 10)]
    noise_uniform: usize,
    #[arg(long, default_value_t = 10)]
    noise_permuted: usize,
    #[arg(long, default_value_t = 0.75)]
    train_fraction: f64,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value = "1se", value_parser = parse_rule)]
    rule: CvRule,
    /// Seeds the augmentation, the split and the folds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report JSON destination.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    dump_components: Option<PathBuf>,
}

fn parse_penalty(s: &str) -> Result<PenaltySpec, String> {
    PenaltySpec::parse(s).map_err(|e| e.to_string())
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    LossKind::parse(s).map_err(|e| e.to_string())
}

fn parse_rule(s: &str) -> Result<CvRule, String> {
    CvRule::parse(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot set up {t} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Fit(a) => commands::fit(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Path(a) => commands::path(&a),
        Command::Cv(a) => commands::cv(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::LambdaMax(a) => commands::lambda_max(&a),
        Command::SparsityProbe(a) => commands::sparsity_probe(&a),
        Command::Analyze(a) => commands::analyze(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if e.exit_code() == 3 {
                eprintln!("numerical failure: {e}");
            } else {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
