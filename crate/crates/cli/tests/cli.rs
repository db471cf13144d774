//! End-to-end CLI behavior: flags, exit codes, and file outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use transco_core::rng;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_transco"));
    cmd.env("TRANSCO_LOG", "off");
    cmd
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("transco-cli-tests").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_csv(path: &Path, x: &DMatrix<f64>, y: &DVector<f64>) {
    let p = x.ncols();
    let mut out = (0..p).map(|j| format!("x{j}")).collect::<Vec<_>>().join(",");
    out.push_str(",co\n");
    for i in 0..x.nrows() {
        for j in 0..p {
            out.push_str(&format!("{},", x[(i, j)]));
        }
        out.push_str(&format!("{}\n", y[i]));
    }
    fs::write(path, out).unwrap();
}

/// Contaminated target plus clean-ish sources sharing a coefficient bank.
fn synthetic_pair(dir: &Path, seed: u64) -> (PathBuf, Vec<PathBuf>, Vec<usize>) {
    let (n, n_src, p, k) = (60usize, 150usize, 6usize, 2usize);
    let mut r = rng::stream(seed, "cli-data");
    let b = DMatrix::from_fn(p, k, |_, _| StandardNormal.sample(&mut r));
    let w = DVector::from_vec(vec![1.2, -0.7]);
    let beta = &b * &w;
    let x = DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut r));
    let mut y = &x * &beta + DVector::from_fn(n, |_, _| StandardNormal.sample(&mut r));
    let planted: Vec<usize> = vec![3, 17, 31, 44, 52, 58];
    for &i in &planted {
        y[i] += 9.0 + r.gen_range(0.0..4.0);
    }
    let target = dir.join("target.csv");
    write_csv(&target, &x, &y);
    let mut sources = Vec::new();
    for s in 0..k {
        let xs = DMatrix::from_fn(n_src, p, |_, _| StandardNormal.sample(&mut r));
        let beta_s = b.column(s).into_owned();
        let mut ys = &xs * &beta_s
            + DVector::from_fn(n_src, |_, _| StandardNormal.sample(&mut r));
        for i in 0..15 {
            ys[i * 10] += 10.0;
        }
        let path = dir.join(format!("source{s}.csv"));
        write_csv(&path, &xs, &ys);
        sources.push(path);
    }
    (target, sources, planted)
}

fn f1(detected: &[usize], truth: &[usize]) -> f64 {
    transco_core::metrics::f1_detection(detected, truth).f1
}

fn detected_from_report(report: &serde_json::Value) -> Vec<usize> {
    report["detected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["index"].as_u64().unwrap() as usize)
        .collect()
}

#[test]
fn fit_ipod_on_clean_data_detects_nothing() {
    let dir = tmp_dir("fit-clean");
    let mut r = rng::stream(5, "clean");
    let x = DMatrix::from_fn(30, 3, |_, _| StandardNormal.sample(&mut r));
    let beta = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let y = &x * &beta; // noiseless
    let data = dir.join("clean.csv");
    write_csv(&data, &x, &y);
    let out = dir.join("report.json");
    let status = bin()
        .args(["fit", "--data"])
        .arg(&data)
        .args(["--response", "co", "--method", "ipod", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["detected"].as_array().unwrap().len(), 0);
    assert_eq!(report["method"], "ipod");
    let beta_hat: Vec<f64> = report["beta_hat"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    for (a, b) in beta_hat.iter().zip(beta.iter()) {
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn fit_transco_without_sources_exits_2() {
    let dir = tmp_dir("no-sources");
    let (target, _, _) = synthetic_pair(&dir, 11);
    let output = bin()
        .args(["fit", "--data"])
        .arg(&target)
        .args(["--response", "co", "--method", "transco"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("--sources"), "stderr was: {stderr}");
}

#[test]
fn fit_rejects_unknown_method() {
    let dir = tmp_dir("bad-method");
    let (target, _, _) = synthetic_pair(&dir, 12);
    let output = bin()
        .args(["fit", "--data"])
        .arg(&target)
        .args(["--response", "co", "--method", "huber"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn fit_transco_detection_beats_ipod_on_contaminated_pair() {
    let dir = tmp_dir("fit-pair");
    let (target, sources, planted) = synthetic_pair(&dir, 21);
    let run = |method: &str, with_sources: bool| -> serde_json::Value {
        let out = dir.join(format!("{method}.json"));
        let mut cmd = bin();
        cmd.args(["fit", "--data"])
            .arg(&target)
            .args(["--response", "co", "--method", method, "--out"])
            .arg(&out);
        if with_sources {
            cmd.arg("--sources");
            for s in &sources {
                cmd.arg(s);
            }
        }
        let status = cmd.status().unwrap();
        assert!(status.success(), "{method} failed");
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap()
    };
    let ipod = run("ipod", false);
    let transco = run("transco", true);
    let f1_ipod = f1(&detected_from_report(&ipod), &planted);
    let f1_transco = f1(&detected_from_report(&transco), &planted);
    assert!(
        f1_transco >= f1_ipod,
        "transco F1 {f1_transco} < ipod F1 {f1_ipod}"
    );
    assert!(transco["w_hat"].as_array().unwrap().len() == 2);
    assert!(transco["identification_gap"].as_f64().is_some());
    assert_eq!(transco["sources"].as_array().unwrap().len(), 2);
}

#[test]
fn fit_scores_heldout_data() {
    let dir = tmp_dir("fit-test-split");
    let mut r = rng::stream(41, "heldout");
    let beta = DVector::from_vec(vec![2.0, -1.0, 0.5]);
    let x = DMatrix::from_fn(50, 3, |_, _| StandardNormal.sample(&mut r));
    let y = &x * &beta + DVector::from_fn(50, |_, _| StandardNormal.sample(&mut r)) * 0.05;
    let train = dir.join("train.csv");
    write_csv(&train, &x, &y);
    let xt = DMatrix::from_fn(30, 3, |_, _| StandardNormal.sample(&mut r));
    let yt = &xt * &beta + DVector::from_fn(30, |_, _| StandardNormal.sample(&mut r)) * 0.05;
    let test = dir.join("test.csv");
    write_csv(&test, &xt, &yt);
    let out = dir.join("report.json");
    let status = bin()
        .args(["fit", "--data"])
        .arg(&train)
        .args(["--response", "co", "--method", "ols", "--test"])
        .arg(&test)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["test_n"], 30);
    assert!(report["test_r2"].as_f64().unwrap() > 0.99);
    assert!(report["test_huber"].as_f64().unwrap() < 0.01);
}

#[test]
fn tune_writes_full_path() {
    let dir = tmp_dir("tune");
    let (target, _, _) = synthetic_pair(&dir, 31);
    let out = dir.join("path.csv");
    let output = bin()
        .args(["tune", "--data"])
        .arg(&target)
        .args(["--response", "co", "--method", "ipod", "--grid-size", "17", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    let report: serde_json::Value = serde_json::from_str(stdout.trim()).unwrap();

    let content = fs::read_to_string(&out).unwrap();
    let mut lines = content.lines();
    assert_eq!(lines.next().unwrap(), "lambda,df,rss,bic");
    let rows: Vec<Vec<String>> = lines
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect();
    // grid_size + appended zero
    assert_eq!(rows.len(), 18);
    assert_eq!(rows[0][1], "0");
    assert_eq!(rows.last().unwrap()[0], "0");
    // Reported best index minimizes BIC among budget-admissible rows
    // (DF at most half the residual degrees of freedom).
    let best = report["best_index"].as_u64().unwrap() as usize;
    let cap = (60 - 6) / 2;
    let best_bic: f64 = rows[best][3].parse().unwrap();
    for row in &rows {
        let df: usize = row[1].parse().unwrap();
        let bic: f64 = row[3].parse().unwrap();
        if df <= cap {
            assert!(best_bic <= bic + 1e-12);
        }
    }
}

const SMALL_CONFIG: &str = "\
example_id = ex1
n = 40
p = 10
K = 2
N = 60
s = 8
rho = 0.1
h = 1.0
w = 1.0,-0.5
seed = 77
trials = 3
grid_size = 12
max_iter = 400
";

#[test]
fn simulate_runs_and_summarizes() {
    let dir = tmp_dir("simulate");
    let config = dir.join("config.txt");
    fs::write(&config, SMALL_CONFIG).unwrap();
    let out = dir.join("results");
    let status = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let records = transco_core::dataio::read_records_csv(&out.join("records.csv")).unwrap();
    assert_eq!(records.len(), 9); // 3 trials x 3 methods
    let summary = fs::read_to_string(out.join("records.summary.csv")).unwrap();
    for method in ["ipod", "transco", "ptl"] {
        assert!(summary.contains(&format!("{method},mse")), "{summary}");
    }
    let plot = fs::read_to_string(out.join("plotdata.csv")).unwrap();
    assert_eq!(plot.lines().count(), 10);
    assert!(plot.lines().nth(1).unwrap().starts_with("40,"));
    assert!(out.join("records.json").exists());
}

#[test]
fn simulate_rejects_bad_config() {
    let dir = tmp_dir("simulate-bad");
    let config = dir.join("config.txt");
    fs::write(&config, SMALL_CONFIG.replace("rho = 0.1", "rho = 1.5")).unwrap();
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.join("results"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}
