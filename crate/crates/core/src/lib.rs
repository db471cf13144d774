//! Robust regression and transfer learning under the mean-shift outlier model.
//!
//! The mean-shift model augments the linear model with one shift parameter per
//! observation, `y_i = x_i' beta + gamma_i + eps_i`; an observation with a
//! nonzero `gamma_i` is an influential point. Enforcing sparsity on `gamma`
//! yields simultaneous outlier detection and robust coefficient estimates.
//!
//! Two solvers are provided:
//!
//! * [`ipod`] — Theta-IPOD: iterative hard thresholding against the hat-matrix
//!   projector on a single dataset, with BIC-based penalty tuning.
//! * [`transfer`] — Trans-CO: multi-source transfer learning under the
//!   approximate-linear assumption `beta = B w + delta`, alternating an OLS
//!   weight update with joint hard-thresholded gradient steps on
//!   `xi = [delta; gamma]`.
//!
//! Supporting modules: [`thresholding`] (threshold rules and induced
//! penalties), [`baselines`] (OLS, lasso, PTL), [`simgen`] (synthetic
//! benchmark designs), [`metrics`] (MSE, F1, Huber loss, R-squared), and
//! [`dataio`] (CSV/config ingestion, result persistence).

pub mod baselines;
pub mod dataio;
pub mod error;
pub mod ipod;
mod linalg;
pub mod metrics;
pub mod rng;
pub mod simgen;
pub mod thresholding;
pub mod transfer;

pub use error::{Error, Result};
pub use ipod::{Dataset, IpodFit, IpodOptions, TuningPath};
pub use transfer::{SourceEnsemble, TransferFit, TransferState, TransformCache};
