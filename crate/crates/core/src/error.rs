use thiserror::Error;

/// Errors produced by the models, solvers and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("rate {rate_bps} bit/s is below the feasible band starting at {min_rate_bps} bit/s")]
    InfeasibleRate { rate_bps: f64, min_rate_bps: f64 },

    #[error("quality {q_db} dB outside [{q_min_db}, {q_max_db}] dB")]
    OutOfBand { q_db: f64, q_min_db: f64, q_max_db: f64 },

    #[error("need at least {needed} rate-distortion points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("curve fit rejected: {0}")]
    FitRejected(String),

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("no convergence after {iterations} iterations ({detail})")]
    NonConvergence { iterations: usize, detail: String },

    #[error("stacked column of {bytes} bytes exceeds the {limit}-byte RTP payload")]
    PayloadOverflow { bytes: usize, limit: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn is_infeasible(&self) -> bool {
        matches!(self, Error::Infeasible(_) | Error::InfeasibleRate { .. })
    }
}
