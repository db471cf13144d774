//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The design matrix is rank deficient; carries the numerical rank found.
    #[error("singular design: numerical rank {rank} < {cols} columns")]
    SingularDesign { rank: usize, cols: usize },

    /// Source coefficient bank has (near-)collinear columns.
    #[error("degenerate source ensemble: {0}")]
    EnsembleDegeneracy(String),

    /// The transfer design `Z = X * B_hat` is rank deficient.
    #[error("degenerate transfer design: {0}")]
    TransferDegeneracy(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical trouble;
    /// the CLI maps these to exit code 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::DimensionMismatch(_)
                | Error::InvalidConfig(_)
                | Error::Parse(_)
                | Error::UndefinedMetric(_)
        )
    }
}
