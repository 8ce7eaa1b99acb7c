//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the linear algebra kernels, the PHY chain, the codec
/// and the simulation harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rank deficient at pivot step {step}: residual norm {norm:e} below threshold {threshold:e}")]
    RankDeficient {
        step: usize,
        norm: f64,
        threshold: f64,
    },

    #[error("SVD did not converge after {sweeps} sweeps (off-diagonal residual {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("payload decode error at byte offset {offset}: {reason}")]
    Decode { offset: usize, reason: String },

    #[error("bit budget of {target_bits} bits cannot fit rank {rank} factors at >= 2 bits per component")]
    InfeasibleBudget { target_bits: u64, rank: usize },

    #[error("zero channel vector at subcarrier {subcarrier}")]
    Equalization { subcarrier: usize },

    #[error("trial with seed {seed:#018x} failed: {source}")]
    Trial {
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
