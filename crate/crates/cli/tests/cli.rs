use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use gsam::AdditiveModel;
use tempfile::TempDir;

fn gsam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsam")).args(args).output().expect("run gsam")
}

fn write_data(dir: &Path, n: usize) -> String {
    let mut text = String::from("x1,y,x2,x3\n");
    for i in 0..n {
        let a = ((i * 37) % n) as f64 / n as f64;
        let b = ((i * 11) % n) as f64 / n as f64;
        let c = ((i * 53 + 7) % n) as f64 / n as f64;
        let noise = 0.1 * (((i * 7919) % 97) as f64 / 97.0 - 0.5);
        let y = (6.0 * a).sin() + 2.0 * (b - 0.5).abs() + noise;
        writeln!(text, "{a},{y},{b},{c}").unwrap();
    }
    let path = dir.join("data.csv");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn fit_then_predict_reproduces_fitted_values() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path(), 60);
    let model_path = dir.path().join("model.json").display().to_string();
    let pred_path = dir.path().join("pred.csv").display().to_string();

    let o = gsam(&["fit", "--data", &data, "--response", "y", "--penalty", "sobolev", "--lambda", "0.05", "--out", &model_path]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = gsam(&["predict", "--model", &model_path, "--data", &data, "--response", "y", "--out", &pred_path]);
    assert!(o.status.success(), "{}", stderr(&o));

    let model = AdditiveModel::from_json(&std::fs::read_to_string(&model_path).unwrap()).unwrap();
    assert_eq!(model.feature_names, ["x1", "x2", "x3"]);
    let mut rdr = csv::Reader::from_path(&pred_path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["eta", "mean"]);
    let eta: Vec<f64> = rdr.records().map(|r| r.unwrap()[0].parse().unwrap()).collect();

    let table = std::fs::read_to_string(&data).unwrap();
    let x: Vec<Vec<f64>> = table
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|s| s.parse().unwrap()).collect();
            vec![v[0], v[2], v[3]]
        })
        .collect();
    let x = nalgebra::DMatrix::from_fn(x.len(), 3, |i, j| x[i][j]);
    let fitted = model.predict(&x).unwrap();
    assert_eq!(eta.len(), fitted.len());
    for (a, b) in eta.iter().zip(&fitted) {
        assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
    }
}

#[test]
fn cv_with_a_fixed_seed_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path(), 50);
    let run = |name: &str| {
        let out = dir.path().join(name).display().to_string();
        let o = gsam(&["cv", "--data", &data, "--response", "y", "--n-lambda", "6", "--ratio", "0.05", "--k", "3", "--seed", "4", "--out", &out]);
        assert!(o.status.success(), "{}", stderr(&o));
        (std::fs::read(&out).unwrap(), o.stdout)
    };
    let (a, sa) = run("a.json");
    let (b, sb) = run("b.json");
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert!(doc["selected_lambda_1se"].is_number());
}

#[test]
fn usage_errors_exit_with_two() {
    let o = gsam(&["fit", "--bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gsam(&["simulate", "--scenario", "9"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bad_input_exits_with_one_and_names_the_line() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "y,x\n1,0.5\n2,oops\n3,0.1\n").unwrap();
    let p = path.display().to_string();
    let o = gsam(&["fit", "--data", &p, "--response", "y", "--lambda", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("bad.csv:3:"), "{msg}");

    let o = gsam(&["fit", "--data", &p, "--response", "nope", "--lambda", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = gsam(&["fit", "--data", "/no/such/file.csv", "--response", "y", "--lambda", "0.1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn lambda_max_and_probe_report_numbers() {
    let dir = TempDir::new().unwrap();
    let data = write_data(dir.path(), 40);
    let o = gsam(&["lambda-max", "--data", &data, "--response", "y", "--penalty", "tf0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("lambda_max"));

    let out = dir.path().join("probe.csv").display().to_string();
    let o = gsam(&["sparsity-probe", "--data", &data, "--response", "y", "--n-lambda", "5", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(&out).unwrap();
    assert_eq!(rdr.records().count(), 5);
}

#[test]
fn analyze_and_simulate_run_end_to_end() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.json").display().to_string();
    let o = gsam(&[
        "analyze", "--standin-n", "120", "--noise-uniform", "2", "--noise-permuted", "2", "--n-lambda", "8", "--k", "3", "--out", &report,
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(doc["schema_version"].is_number());

    let reps = dir.path().join("reps.csv").display().to_string();
    let o = gsam(&["simulate", "--scenario", "2", "--n", "60", "--p", "4", "--reps", "2", "--penalty", "tf0", "--out", &reps]);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(&reps).unwrap();
    assert_eq!(rdr.records().count(), 2);
}
