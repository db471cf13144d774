//! JSON fit reports written by `transco fit` and `transco tune`.

use serde::Serialize;
use transco_core::ipod::TuningPath;

#[derive(Debug, Serialize)]
pub struct DetectedPoint {
    pub index: usize,
    pub gamma: f64,
}

#[derive(Debug, Serialize)]
pub struct PathSummary {
    pub lambdas: Vec<f64>,
    pub df: Vec<usize>,
    pub rss: Vec<f64>,
    pub bic: Vec<f64>,
    pub best_index: usize,
}

impl From<&TuningPath> for PathSummary {
    fn from(p: &TuningPath) -> Self {
        Self {
            lambdas: p.lambdas.clone(),
            df: p.df.clone(),
            rss: p.rss.clone(),
            bic: p.bic.clone(),
            best_index: p.best_index,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SourceSummary {
    pub index: usize,
    pub n: usize,
    pub lambda_adj: f64,
    pub detected: usize,
    pub iterations: usize,
    pub converged: bool,
}

/// Everything `transco fit` reports about one model fit.
#[derive(Debug, Serialize)]
pub struct FitReport {
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub beta_hat: Vec<f64>,
    /// Influential indices with their estimated mean shifts; empty for
    /// methods without detection (OLS, PTL).
    pub detected: Vec<DetectedPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bic: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_hat: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_hat: Option<Vec<f64>>,
    /// `||B_hat' (X'X/n) delta_hat||_inf`, the identification-condition gap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identification_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sources: Option<Vec<SourceSummary>>,
    /// Held-out scores when a test CSV was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_huber: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub test_r2: Option<f64>,
    pub runtime_ms: u64,
    pub seed: u64,
}

#[derive(Debug, Serialize)]
pub struct TuneReport {
    pub method: String,
    pub best_index: usize,
    pub best_lambda: f64,
    pub best_bic: f64,
    pub path_len: usize,
    pub out: String,
}
