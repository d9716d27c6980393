use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors for space construction, distance computation, and generators.
///
/// Validation failures (`InvalidSpace`, `InvalidExcursion`, `InvalidTree`,
/// `InvalidDistribution`, `InvalidPairing`, `InvalidConfig`, `Domain`,
/// `DimensionMismatch`, `GridMismatch`, `EmptySupport`, `EmptySet`,
/// `NotTransient`) indicate bad inputs and map to CLI exit code 2;
/// `SizeLimitExceeded` maps to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid space: {0}")]
    InvalidSpace(String),

    #[error("invalid excursion: {0}")]
    InvalidExcursion(String),

    #[error("invalid tree: {0}")]
    InvalidTree(String),

    #[error("invalid offspring distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid pairing: {0}")]
    InvalidPairing(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(&'static str),

    #[error("{what} = {actual} exceeds limit {limit}")]
    SizeLimitExceeded {
        what: &'static str,
        actual: usize,
        limit: usize,
    },

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("measure has empty support")]
    EmptySupport,

    #[error("empty point set")]
    EmptySet,

    #[error("excursion is not transient")]
    NotTransient,

    #[error("pitch {pitch} does not divide edge length {edge_len}")]
    GridMismatch { pitch: f64, edge_len: f64 },

    #[error("walk of {steps} steps cannot certify the last exit at level {level}")]
    InsufficientSteps { steps: usize, level: f64 },

    #[error("path stays below {radius} over horizon {horizon}")]
    HorizonTooShort { horizon: f64, radius: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code classification: 2 for validation errors, 3 for size limits.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::SizeLimitExceeded { .. } => 3,
            _ => 2,
        }
    }
}
