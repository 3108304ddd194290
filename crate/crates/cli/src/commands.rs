//! Subcommand bodies.

use std::fmt::Write as _;

use gsam::losses::sigmoid;
use gsam::path::{fit_path, kfold_cv, lambda_grid, log_grid, CvRule};
use gsam::sim::{analysis_standin, analyze as run_analysis, component_mse, generate, replicate, AnalysisConfig, Replicate, Scenario};
use gsam::{fit as fit_model, lambda_max_exact, sparsity_pattern_probe, AdditiveModel, Algorithm, Dataset, LossKind};
use rayon::prelude::*;
use serde::Serialize;

use crate::io::{csv_error, csv_writer, dump_components, emit, Table};
use crate::{AnalyzeArgs, CliError, CvArgs, DataArgs, FitArgs, LambdaMaxArgs, PathArgs, PredictArgs, ProbeArgs, SelectArg, SimulateArgs};

fn load(args: &DataArgs) -> Result<Dataset, CliError> {
    Table::read(&args.data)?.to_dataset(&args.response)
}

fn summary(model: &AdditiveModel) -> String {
    let names: Vec<&str> = model
        .active_set()
        .iter()
        .map(|&j| model.feature_names.get(j).map_or("?", String::as_str))
        .collect();
    let d = &model.diagnostics;
    format!(
        "penalty {}  loss {}  lambda {:.6e}\nobjective {:.10e}  iterations {}  converged {}\nintercept {:.6e}\nactive ({}): {}\n",
        model.penalty.label(),
        model.loss.name(),
        model.lambda,
        d.objective,
        d.iterations,
        d.converged,
        model.intercept,
        names.len(),
        if names.is_empty() { "-".to_string() } else { names.join(" ") }
    )
}

/// Prints `text` to stdout, or to stderr when stdout carries the main output.
fn report(text: &str, stdout_is_free: bool) {
    if stdout_is_free {
        print!("{text}");
    } else {
        eprint!("{text}");
    }
}

fn warn_unconverged(model: &AdditiveModel) {
    if !model.diagnostics.converged {
        eprintln!(
            "warning: solver stopped after {} iterations without meeting the tolerance",
            model.diagnostics.iterations
        );
    }
}

pub fn fit(a: &FitArgs) -> Result<(), CliError> {
    let data = load(&a.data)?;
    let options = a.solver.options();
    let (model, _) = fit_model(&data, a.solver.loss, &a.solver.penalty, a.lambda, &options, a.solver.algorithm(), None)?;
    warn_unconverged(&model);
    emit(a.out.as_deref(), &model.to_json()?)?;
    if let Some(p) = &a.dump_components {
        dump_components(&model, p)?;
    }
    report(&summary(&model), a.out.is_some());
    Ok(())
}

fn inverse_link(loss: LossKind, eta: f64) -> f64 {
    match loss {
        LossKind::Gaussian => eta,
        LossKind::BernoulliLogit => sigmoid(eta),
        LossKind::PoissonLog => eta.exp(),
    }
}

pub fn predict(a: &PredictArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&a.model).map_err(|e| CliError::Io(format!("{}: {e}", a.model.display())))?;
    let model = AdditiveModel::from_json(&text)?;
    let table = Table::read(&a.data)?;
    let features: Vec<String> = if model.feature_names.is_empty() {
        // unnamed model: every non-response column in file order
        table
            .names
            .iter()
            .filter(|n| Some(n.as_str()) != a.response.as_deref())
            .cloned()
            .collect()
    } else {
        model.feature_names.clone()
    };
    let x = table.design_for(&features)?;
    let eta = model.predict(&x)?;
    let mut out = String::from("eta,mean\n");
    for v in &eta {
        writeln!(out, "{v},{}", inverse_link(model.loss, *v)).expect("write to string");
    }
    emit(a.out.as_deref(), &out)?;
    if let Some(r) = &a.response {
        let col = table.column_index(r)?;
        let y: Vec<f64> = table.rows.iter().map(|row| row[col]).collect();
        model.loss.check_responses(&y)?;
        report(
            &format!("rows {}  mean {} loss {:.10e}\n", y.len(), model.loss.name(), model.loss.mean_value(&y, &eta)),
            a.out.is_some(),
        );
    }
    Ok(())
}

pub fn path(a: &PathArgs) -> Result<(), CliError> {
    let data = load(&a.data)?;
    let options = a.solver.options();
    let grid = lambda_grid(&data, a.solver.loss, a.grid.n_lambda, a.grid.ratio, a.solver.omega)?;
    let result = fit_path(&data, &a.solver.penalty, a.solver.loss, &grid, &options, a.solver.algorithm())?;
    emit(a.out.as_deref(), &result.to_json()?)?;
    report(&result.table(), a.out.is_some());
    if let Some(f) = &result.failure {
        eprintln!("warning: path stopped at index {} (lambda {:.6e}): {}", f.index, f.lambda, f.message);
    }
    Ok(())
}

pub fn cv(a: &CvArgs) -> Result<(), CliError> {
    let data = load(&a.data)?;
    let options = a.solver.options();
    let grid = lambda_grid(&data, a.solver.loss, a.grid.n_lambda, a.grid.ratio, a.solver.omega)?;
    let result = kfold_cv(&data, &a.solver.penalty, a.solver.loss, &grid, a.k, a.seed, a.rule, &options, a.solver.algorithm())?;
    emit(a.out.as_deref(), &result.to_json()?)?;
    let mut text = result.table();
    if let (Some(lmin), Some(l1se)) = (result.selected_lambda_min, result.selected_lambda_1se) {
        writeln!(text, "lambda_min {lmin:.6e}  lambda_1se {l1se:.6e}").expect("write to string");
    }
    report(&text, a.out.is_some());
    if let (Some(p), Some(m)) = (&a.dump_components, result.selected_model()) {
        dump_components(m, p)?;
    }
    Ok(())
}

/// One replicate with lambda picked by K-fold CV on the training sample.
fn replicate_cv(scenario: Scenario, n: usize, p: usize, seed: u64, spec: &gsam::PenaltySpec, k: usize) -> Result<Replicate, CliError> {
    let train = generate(scenario, n, p, seed)?;
    let options = gsam::FitOptions::default();
    let grid = lambda_grid(&train.data, LossKind::Gaussian, 50, 1e-3, None)?;
    let path = kfold_cv(&train.data, spec, LossKind::Gaussian, &grid, k, seed, CvRule::OneSe, &options, Algorithm::BlockCoordinate)?;
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

pub fn simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let scenario = Scenario::new(a.scenario)?;
    if a.reps == 0 || a.n.is_empty() || a.penalty.is_empty() {
        return Err(CliError::Input("need at least one replicate, size and penalty".into()));
    }
    let jobs: Vec<(usize, usize, usize)> = (0..a.penalty.len())
        .flat_map(|s| a.n.iter().flat_map(move |&n| (0..a.reps).map(move |r| (s, n, r))))
        .collect();
    let results: Vec<Replicate> = jobs
        .par_iter()
        .map(|&(s, n, r)| {
            // the same training draw for every penalty
            let seed = a.seed.wrapping_add(r as u64).wrapping_add((n as u64) << 32);
            let spec = &a.penalty[s];
            match a.select {
                SelectArg::Test => replicate(scenario, n, a.p, seed, spec, &gsam::FitOptions::default()).map_err(CliError::from),
                SelectArg::Cv => replicate_cv(scenario, n, a.p, seed, spec, a.k),
            }
        })
        .collect::<Result<_, _>>()?;
    if let Some(path) = &a.out {
        let mut w = csv_writer(path)?;
        w.write_record(["scenario", "penalty", "n", "rep", "seed", "lambda", "active", "mse"])
            .map_err(csv_error)?;
        for (&(_, _, r), rep) in jobs.iter().zip(&results) {
            w.write_record([
                a.scenario.to_string(),
                rep.penalty.clone(),
                rep.n.to_string(),
                r.to_string(),
                rep.seed.to_string(),
                rep.lambda.to_string(),
                rep.active.to_string(),
                rep.mse.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    let mut table = format!("scenario {}  p {}  reps {}\n{:<16} {:>6} {:>12} {:>12}\n", a.scenario, a.p, a.reps, "method", "n", "mean_mse", "se");
    for spec in &a.penalty {
        for &n in &a.n {
            let mse: Vec<f64> = results
                .iter()
                .filter(|r| r.n == n && r.penalty == spec.label())
                .map(|r| r.mse)
                .collect();
            let k = mse.len() as f64;
            let mean = mse.iter().sum::<f64>() / k;
            let se = if mse.len() > 1 {
                (mse.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
            } else {
                f64::NAN
            };
            writeln!(table, "{:<16} {:>6} {:>12.6} {:>12.6}", spec.label(), n, mean, se).expect("write to string");
        }
    }
    print!("{table}");
    Ok(())
}

pub fn lambda_max(a: &LambdaMaxArgs) -> Result<(), CliError> {
    let data = load(&a.data)?;
    let bound = gsam::optimizer::lambda_max_omega(&data, a.loss, a.omega)?;
    println!("lambda_max {bound:.10e}");
    if let Some(spec) = &a.penalty {
        let exact = lambda_max_exact(&data, a.loss, spec, a.omega)?;
        println!("lambda_max_exact {exact:.10e}  ({})", spec.label());
    }
    Ok(())
}

pub fn sparsity_probe(a: &ProbeArgs) -> Result<(), CliError> {
    let data = load(&a.data)?;
    let top = gsam::optimizer::lambda_max_omega(&data, a.loss, None)?;
    let grid = log_grid(top, a.grid.n_lambda, a.grid.ratio)?;
    let sizes = sparsity_pattern_probe(&data, a.loss, a.squared, &grid, &gsam::FitOptions::default())?;
    let mut text = format!("{:>14} {:>6}\n", "lambda", "|S|");
    for (l, s) in grid.iter().zip(&sizes) {
        writeln!(text, "{l:>14.6e} {s:>6}").expect("write to string");
    }
    print!("{text}");
    if let Some(path) = &a.out {
        let mut w = csv_writer(path)?;
        w.write_record(["lambda", "active"]).map_err(csv_error)?;
        for (l, s) in grid.iter().zip(&sizes) {
            w.write_record([l.to_string(), s.to_string()]).map_err(csv_error)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct AnalysisDocument<'a> {
    schema_version: u32,
    #[serde(flatten)]
    report: &'a gsam::sim::AnalysisReport,
}

pub fn analyze(a: &AnalyzeArgs) -> Result<(), CliError> {
    let data = match (&a.data, &a.response) {
        (Some(path), Some(resp)) => Table::read(path)?.to_dataset(resp)?,
        _ => analysis_standin(a.standin_n, a.seed)?,
    };
    let cfg = AnalysisConfig {
        spec: a.solver.penalty.clone(),
        loss: a.solver.loss,
        n_uniform: a.noise_uniform,
        n_permuted: a.noise_permuted,
        train_fraction: a.train_fraction,
        folds: a.k,
        rule: a.rule,
        n_lambda: a.grid.n_lambda,
        ratio: a.grid.ratio,
        seed: a.seed,
        options: a.solver.options(),
    };
    let rep = run_analysis(&data, &cfg)?;
    let doc = AnalysisDocument {
        schema_version: gsam::model::SCHEMA_VERSION,
        report: &rep,
    };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    emit(a.out.as_deref(), &json)?;
    if let Some(p) = &a.dump_components {
        dump_components(&rep.model, p)?;
    }
    let text = format!(
        "train {}  test {}  lambda {:.6e}\ntest loss {:.6e}  TPR {:.3}  FPR {:.3}\nactive ({}): {}\n",
        rep.n_train,
        rep.n_test,
        rep.lambda,
        rep.test_loss,
        rep.tpr,
        rep.fpr,
        rep.active.len(),
        rep.active.join(" ")
    );
    report(&text, a.out.is_some());
    Ok(())
}
