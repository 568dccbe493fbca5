//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Points whose neighborhoods are too sparse for the requested radius.
    #[error("insufficient sampling at {} point(s): {point_ids:?}", point_ids.len())]
    InsufficientSampling { point_ids: Vec<usize> },

    /// Points whose neighborhoods are rank-deficient (collinear or worse).
    #[error("degenerate neighborhood at {} point(s): {point_ids:?}", point_ids.len())]
    DegenerateNeighborhood { point_ids: Vec<usize> },

    /// The operator has more than one connected component where one is required.
    #[error("model is disconnected ({components} components); spectral scales need lambda_1 > 0")]
    DisconnectedModel { components: usize },

    #[error("eigensolver failed to converge: worst residuals {residuals:?}")]
    SolverFailure { residuals: Vec<f64> },

    /// Dense heat-kernel allocation refused; carries the override flag name.
    #[error("{points} points exceeds the dense heat-kernel cap of {cap}; pass {override_flag} to proceed")]
    MemoryGuard {
        points: usize,
        cap: usize,
        override_flag: &'static str,
    },

    #[error("tied lifespans straddle the requested cut: {tied:?}")]
    AmbiguousLifespans { tied: Vec<f64> },

    #[error("incompatible parameters: index fingerprint {expected} vs query {found}")]
    IncompatibleParameters { expected: String, found: String },

    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),

    #[error("parse error at line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
