use thiserror::Error;

/// Errors produced by the analysis, synthesis and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KreissError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hurwitz (spectral abscissa {0:e})")]
    NotHurwitz(f64),

    #[error("ill-posed interconnection: condition number {0:e} exceeds threshold")]
    IllPosed(f64),

    #[error("gamma {gamma:e} does not exceed the feedthrough gain {feedthrough:e}")]
    GammaTooSmall { gamma: f64, feedthrough: f64 },

    #[error("plant has a nonzero feedthrough term D")]
    NonzeroFeedthrough,

    #[error("vertex enumeration over 2^{n} vertices exceeds the limit 2^{limit}")]
    TooManyVertices { n: usize, limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("no threshold in bracket: both ends classify as {0}")]
    NoThreshold(String),

    #[error("integration diverged at t = {t:e}: {reason}")]
    Divergence { t: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, KreissError>;
