//! Browser bindings for the interactive demo page.
//!
//! Three operations, all JSON-in/JSON-out so the page needs no generated
//! glue beyond strings: [`run_demo`] (generate a contaminated instance and
//! fit both detectors), [`tuning_paths`] (BIC curves for both solvers), and
//! [`descent_trace`] (objective trace of the transfer solver at one fixed
//! penalty). Errors come back as `{"error": "..."}` rather than thrown
//! exceptions.
//!
//! Build for the web with `wasm-pack build --target web crates/wasm`; the
//! exports also compile and run natively, which is how they are tested.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use transco_core::ipod::{ipod_auto_path, IpodOptions};
use transco_core::metrics::{f1_detection, mse_beta};
use transco_core::simgen::{
    gen_problem, CovarianceKind, ExampleId, NoiseKind, SimulationConfig, WeightSpec,
};
use transco_core::transfer::{
    fit_sources, transco_bic_path, transco_fit, transco_lambda_ceiling, TranscoOptions,
};

#[derive(Debug, Deserialize)]
struct DemoConfig {
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default = "default_p")]
    p: usize,
    #[serde(default = "default_k")]
    k: usize,
    #[serde(default = "default_n_source")]
    n_source: usize,
    #[serde(default = "default_s")]
    s: usize,
    #[serde(default = "default_rho")]
    rho: f64,
    #[serde(default = "default_h")]
    h: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    trial: u64,
}

fn default_n() -> usize {
    120
}
fn default_p() -> usize {
    12
}
fn default_k() -> usize {
    3
}
fn default_n_source() -> usize {
    240
}
fn default_s() -> usize {
    9
}
fn default_rho() -> f64 {
    0.1
}
fn default_h() -> f64 {
    0.75
}

impl DemoConfig {
    /// Browser-budget caps plus the design's own consistency rules.
    fn to_sim(&self) -> Result<SimulationConfig, String> {
        if self.n > 400 || self.p > 40 || self.k > 6 || self.n_source > 800 {
            return Err("demo caps: n <= 400, p <= 40, K <= 6, N <= 800".into());
        }
        let cfg = SimulationConfig {
            example_id: ExampleId::Ex1,
            n: self.n,
            p: self.p,
            k_sources: self.k,
            n_per_source: self.n_source,
            s: self.s,
            rho: self.rho,
            h: self.h,
            w_spec: WeightSpec::Uniform,
            covariance: CovarianceKind::Identity,
            noise: NoiseKind::Unit,
            seed: self.seed,
            shared_contamination: false,
        };
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn to_vec(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

fn nonzero_indices(v: &DVector<f64>) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, &g)| g != 0.0)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Serialize)]
struct MethodResult {
    detected: Vec<usize>,
    gamma_hat: Vec<f64>,
    f1: f64,
    precision: f64,
    recall: f64,
    mse: f64,
    log_mse: f64,
    lambda: f64,
    iterations: usize,
    converged: bool,
}

#[derive(Serialize)]
struct DemoResult {
    n: usize,
    p: usize,
    truth_outliers: Vec<usize>,
    truth_gamma: Vec<f64>,
    /// Residuals of the plain least-squares fit, for the scatter plot.
    ols_residuals: Vec<f64>,
    ipod: MethodResult,
    transco: MethodResult,
    w_hat: Vec<f64>,
}

fn demo_impl(config_json: &str) -> Result<String, String> {
    let cfg: DemoConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    let sim = cfg.to_sim()?;
    let (target, sources, truth) = gen_problem(&sim, cfg.trial).map_err(|e| e.to_string())?;

    let score = |detected: &[usize], beta_hat: &DVector<f64>| -> Result<(f64, f64, f64, f64, f64), String> {
        let d = f1_detection(detected, &truth.outliers_target);
        let mse = mse_beta(beta_hat, &truth.beta).map_err(|e| e.to_string())?;
        Ok((d.f1, d.precision, d.recall, mse, mse.max(f64::MIN_POSITIVE).ln()))
    };

    let (_, ifit) = ipod_auto_path(&target, &IpodOptions::default()).map_err(|e| e.to_string())?;
    let (f1_i, prec_i, rec_i, mse_i, log_i) = score(&ifit.detected(), &ifit.beta_hat)?;

    let ensemble = fit_sources(&sources, &IpodOptions::default()).map_err(|e| e.to_string())?;
    let opts = TranscoOptions {
        max_iter: 1500,
        ..Default::default()
    };
    let (_, tfit) = transco_bic_path(&target, &ensemble, &opts).map_err(|e| e.to_string())?;
    let (f1_t, prec_t, rec_t, mse_t, log_t) = score(&tfit.detected(), &tfit.beta_hat)?;

    let ols = transco_core::baselines::ols_fit(&target.x, &target.y).map_err(|e| e.to_string())?;
    let result = DemoResult {
        n: target.n(),
        p: target.p(),
        truth_outliers: truth.outliers_target.clone(),
        truth_gamma: to_vec(&truth.gamma_target),
        ols_residuals: to_vec(&(&target.y - &target.x * ols)),
        ipod: MethodResult {
            detected: nonzero_indices(&ifit.gamma_hat),
            gamma_hat: to_vec(&ifit.gamma_hat),
            f1: f1_i,
            precision: prec_i,
            recall: rec_i,
            mse: mse_i,
            log_mse: log_i,
            lambda: ifit.lambda_adj,
            iterations: ifit.iterations,
            converged: ifit.converged,
        },
        transco: MethodResult {
            detected: nonzero_indices(&tfit.gamma_hat),
            gamma_hat: to_vec(&tfit.gamma_hat),
            f1: f1_t,
            precision: prec_t,
            recall: rec_t,
            mse: mse_t,
            log_mse: log_t,
            lambda: tfit.lambda,
            iterations: tfit.iterations,
            converged: tfit.converged,
        },
        w_hat: to_vec(&tfit.w_hat),
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct PathResult {
    lambdas: Vec<f64>,
    df: Vec<usize>,
    rss: Vec<f64>,
    bic: Vec<f64>,
    best_index: usize,
}

#[derive(Serialize)]
struct PathsResult {
    ipod: PathResult,
    transco: PathResult,
}

fn paths_impl(config_json: &str) -> Result<String, String> {
    let cfg: DemoConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    let sim = cfg.to_sim()?;
    let (target, sources, _) = gen_problem(&sim, cfg.trial).map_err(|e| e.to_string())?;
    let (ipath, _) = ipod_auto_path(&target, &IpodOptions::default()).map_err(|e| e.to_string())?;
    let ensemble = fit_sources(&sources, &IpodOptions::default()).map_err(|e| e.to_string())?;
    let opts = TranscoOptions {
        max_iter: 1500,
        ..Default::default()
    };
    let (tpath, _) = transco_bic_path(&target, &ensemble, &opts).map_err(|e| e.to_string())?;
    let convert = |p: &transco_core::ipod::TuningPath| PathResult {
        lambdas: p.lambdas.clone(),
        df: p.df.clone(),
        rss: p.rss.clone(),
        bic: p.bic.clone(),
        best_index: p.best_index,
    };
    serde_json::to_string(&PathsResult {
        ipod: convert(&ipath),
        transco: convert(&tpath),
    })
    .map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct TraceResult {
    lambda: f64,
    lambda_ceiling: f64,
    /// Objective after every half-step (weight update, then shift update).
    objective_trace: Vec<f64>,
    iterations: usize,
    converged: bool,
    detected: Vec<usize>,
}

fn trace_impl(config_json: &str, lambda_frac: f64) -> Result<String, String> {
    if !(0.0..=1.0).contains(&lambda_frac) {
        return Err("lambda_frac must lie in [0, 1]".into());
    }
    let cfg: DemoConfig = serde_json::from_str(config_json).map_err(|e| e.to_string())?;
    let sim = cfg.to_sim()?;
    let (target, sources, _) = gen_problem(&sim, cfg.trial).map_err(|e| e.to_string())?;
    let ensemble = fit_sources(&sources, &IpodOptions::default()).map_err(|e| e.to_string())?;
    let opts = TranscoOptions {
        max_iter: 1500,
        ..Default::default()
    };
    let ceiling = transco_lambda_ceiling(&target, &ensemble, &opts).map_err(|e| e.to_string())?;
    // Log interpolation over the same three decades as the tuning grid.
    let lambda = ceiling * 1e-3f64.powf(1.0 - lambda_frac);
    let fit = transco_fit(&target, &ensemble, lambda, &opts, None).map_err(|e| e.to_string())?;
    serde_json::to_string(&TraceResult {
        lambda,
        lambda_ceiling: ceiling,
        objective_trace: fit.objective_trace.clone(),
        iterations: fit.iterations,
        converged: fit.converged,
        detected: fit.detected(),
    })
    .map_err(|e| e.to_string())
}

fn or_error(result: Result<String, String>) -> String {
    match result {
        Ok(json) => json,
        Err(message) => serde_json::json!({ "error": message }).to_string(),
    }
}

/// Generate a contaminated instance and fit both detectors.
#[wasm_bindgen]
pub fn run_demo(config_json: &str) -> String {
    or_error(demo_impl(config_json))
}

/// BIC tuning paths of both solvers on the same instance.
#[wasm_bindgen]
pub fn tuning_paths(config_json: &str) -> String {
    or_error(paths_impl(config_json))
}

/// Objective trace of the transfer solver at `lambda_frac` of its tuning
/// range (log scale).
#[wasm_bindgen]
pub fn descent_trace(config_json: &str, lambda_frac: f64) -> String {
    or_error(trace_impl(config_json, lambda_frac))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn demo_round_trip() {
        let out = run_demo(r#"{"seed": 3, "n": 80, "p": 8, "k": 2, "n_source": 120, "s": 6}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v.get("error").is_none(), "{out}");
        assert_eq!(v["n"], 80);
        assert_eq!(v["truth_gamma"].as_array().unwrap().len(), 80);
        assert!(v["transco"]["f1"].as_f64().unwrap() >= 0.0);
        assert_eq!(v["w_hat"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn paths_round_trip() {
        let out = tuning_paths(r#"{"seed": 3, "n": 60, "p": 8, "k": 2, "n_source": 90, "s": 6}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v.get("error").is_none(), "{out}");
        assert_eq!(v["ipod"]["df"][0], 0);
        assert_eq!(v["transco"]["df"][0], 0);
    }

    #[test]
    fn trace_is_monotone() {
        let cfg = r#"{"seed": 9, "n": 60, "p": 8, "k": 2, "n_source": 90, "s": 6}"#;
        let out = descent_trace(cfg, 0.5);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v.get("error").is_none(), "{out}");
        let trace: Vec<f64> = v["objective_trace"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert!(trace.len() >= 2);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-8 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn invalid_config_reports_error() {
        let out = run_demo(r#"{"n": 100000}"#);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v["error"].as_str().unwrap().contains("caps"));
        let out = descent_trace(r#"{}"#, 2.0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(v.get("error").is_some());
    }
}
