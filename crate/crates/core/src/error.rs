use thiserror::Error;

/// Errors produced by the simulation, the optimizers and their file formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid action id {0} (expected 0..=15)")]
    InvalidAction(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("symmetric eigensolver did not converge for a {0}x{0} matrix")]
    EigenNonConvergence(usize),

    #[error("propagator lost unitarity (max |U^H U - I| = {0:e})")]
    NonUnitary(f64),

    #[error("full Hilbert space construction refused for {0} sites (limit 8)")]
    OracleTooLarge(usize),

    #[error("exhaustive search over 16^{0} sequences exceeds the 10^7 budget")]
    SearchBudgetExceeded(usize),

    #[error("episode is already done")]
    EpisodeDone,

    #[error("sequence of length {len} exceeds horizon {horizon}")]
    SequenceTooLong { len: usize, horizon: usize },

    #[error("chromosome lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
