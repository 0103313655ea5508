use thiserror::Error;

/// Errors produced by matrix generation, file I/O and experiment setup.
#[derive(Debug, Error)]
pub enum Error {
    #[error("p = {0} is not prime")]
    NonPrimeModulus(u64),

    #[error("extension degree s must be >= 1")]
    ZeroExtensionDegree,

    #[error("field size p^s = {0} exceeds the 2^20 guard")]
    FieldTooLarge(u64),

    #[error("requested {requested} columns but the column universe has only {available}")]
    UniverseExhausted { requested: usize, available: usize },

    #[error("row count m = {m} must not exceed column count n = {n}")]
    BadShape { m: usize, n: usize },

    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coherence requires unit-normalized columns")]
    Unnormalized,

    #[error("sparsity k = {k} exceeds signal length n = {n}")]
    SparsityTooLarge { k: usize, n: usize },

    #[error("cannot add noise to a zero-power measurement vector")]
    ZeroPowerSignal,

    #[error("{path}: malformed matrix file: {message}")]
    MalformedMatrix { path: String, message: String },

    #[error("config error ({location}): {message}")]
    Config { location: String, message: String },

    #[error("{path}: malformed CSV: {message}")]
    MalformedCsv { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            location: location.into(),
            message: message.into(),
        }
    }

    /// Process exit code for the CLI: 2 for configuration/usage problems, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. }
            | Error::NonPrimeModulus(_)
            | Error::ZeroExtensionDegree
            | Error::FieldTooLarge(_)
            | Error::UniverseExhausted { .. }
            | Error::BadShape { .. }
            | Error::SparsityTooLarge { .. } => 2,
            _ => 3,
        }
    }
}
