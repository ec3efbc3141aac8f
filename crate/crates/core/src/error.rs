use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("matrix is rank deficient (rank {rank} < {expected})")]
    RankDeficient { rank: usize, expected: usize },

    #[error("denominator is not stable: root modulus {modulus} >= 1")]
    UnstableDenominator { modulus: f64 },

    #[error("synthesis failed: {0}")]
    Synthesis(String),

    #[error("simulation diverged at step {step}")]
    Diverged { step: usize },

    #[error("detector received a non-finite sample; reset required")]
    DetectorFault,

    #[error("config error: {0}")]
    Config(String),

    #[error("filter artifact error: {0}")]
    Artifact(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
