//! Evaluation metrics: coefficient MSE, detection F1, Huber loss, R-squared.

use std::collections::BTreeSet;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Precision/recall/F1 of a detected index set against the planted truth.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Mean squared coefficient error `(1/p) * ||beta_hat - beta||^2`.
pub fn mse_beta(beta_hat: &DVector<f64>, beta_true: &DVector<f64>) -> Result<f64> {
    if beta_hat.len() != beta_true.len() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vectors have lengths {} and {}",
            beta_hat.len(),
            beta_true.len()
        )));
    }
    Ok((beta_hat - beta_true).norm_squared() / beta_hat.len() as f64)
}

/// Detection score of `detected` against `truth`.
///
/// When both sets are empty the score is 1 in all components, so clean-data
/// trials where nothing is planted and nothing is flagged count as perfect.
pub fn f1_detection(detected: &[usize], truth: &[usize]) -> DetectionScore {
    let det: BTreeSet<usize> = detected.iter().copied().collect();
    let tru: BTreeSet<usize> = truth.iter().copied().collect();
    if det.is_empty() && tru.is_empty() {
        return DetectionScore {
            precision: 1.0,
            recall: 1.0,
            f1: 1.0,
            tp: 0,
            fp: 0,
            fn_: 0,
        };
    }
    let tp = det.intersection(&tru).count();
    let fp = det.len() - tp;
    let fn_ = tru.len() - tp;
    let precision = if det.is_empty() {
        0.0
    } else {
        tp as f64 / det.len() as f64
    };
    let recall = if tru.is_empty() {
        0.0
    } else {
        tp as f64 / tru.len() as f64
    };
    let f1 = if tp == 0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    DetectionScore {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
    }
}

/// Mean Huber loss with knee `alpha`: quadratic inside `|e| <= alpha`,
/// linear `alpha*|e| - alpha^2/2` outside.
pub fn huber_loss(y: &DVector<f64>, y_hat: &DVector<f64>, alpha: f64) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "response vectors have lengths {} and {}",
            y.len(),
            y_hat.len()
        )));
    }
    if alpha <= 0.0 || !alpha.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "huber alpha must be positive, got {alpha}"
        )));
    }
    let total: f64 = y
        .iter()
        .zip(y_hat.iter())
        .map(|(&yi, &yh)| {
            let e = (yi - yh).abs();
            if e <= alpha {
                0.5 * e * e
            } else {
                alpha * e - 0.5 * alpha * alpha
            }
        })
        .sum();
    Ok(total / y.len() as f64)
}

/// Coefficient of determination `1 - SSR/SST`. Negative values are reported
/// as-is; filtering them is a reporting concern, not a metric concern.
pub fn r_squared(y: &DVector<f64>, y_hat: &DVector<f64>) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "response vectors have lengths {} and {}",
            y.len(),
            y_hat.len()
        )));
    }
    if y.len() < 2 {
        return Err(Error::InvalidParameter(
            "r_squared needs at least 2 observations".into(),
        ));
    }
    let mean = y.mean();
    let sst: f64 = y.iter().map(|&v| (v - mean).powi(2)).sum();
    if sst <= 0.0 {
        return Err(Error::UndefinedMetric(
            "r_squared is undefined for a constant response (SST = 0)".into(),
        ));
    }
    let ssr: f64 = y
        .iter()
        .zip(y_hat.iter())
        .map(|(&a, &b)| (a - b).powi(2))
        .sum();
    Ok(1.0 - ssr / sst)
}
