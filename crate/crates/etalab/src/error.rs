use thiserror::Error;

/// Crate-wide error type.
///
/// Variants mirror the failure classes of the numerical pipeline: structural
/// problems with the input data, axiom violations detected at validation
/// time, configuration mistakes, and the various ways a numerical stage can
/// refuse to produce an answer it cannot stand behind.
#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole at or near w = {nearest_pole}: distance {distance:.3e}")]
    PoleProximity { nearest_pole: i64, distance: f64 },

    #[error("pole error: {0}")]
    Pole(String),

    #[error("analytic continuation unavailable: {0}")]
    ContinuationUnavailable(String),

    #[error("unreliable tail model: {0}")]
    UnreliableTail(String),

    #[error("ill-conditioned design (condition number {cond:.3e}): {hint}")]
    Conditioning { cond: f64, hint: String },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code class: configuration/numerical errors exit with 2,
    /// verdict failures with 1 (handled by the caller), success with 0.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
