use std::path::PathBuf;

/// Errors produced anywhere in the forecasting and analysis pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is singular (smallest pivot {pivot:e})")]
    SingularMatrix { pivot: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("target {value} outside support [{a}, {b}]")]
    OutOfSupport { value: f64, a: f64, b: f64 },

    #[error("degenerate distribution: normalizer {z:e} underflows")]
    DegenerateDistribution { z: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: parse error at row {row}, column {col}: {msg}")]
    Parse {
        path: PathBuf,
        row: usize,
        col: usize,
        msg: String,
    },

    #[error("{path}: schema error: {msg}")]
    Schema { path: PathBuf, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Process exit code for the CLI: 1 config, 2 data, 3 numeric, 4 invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 1,
            Error::Io { .. }
            | Error::Parse { .. }
            | Error::Schema { .. }
            | Error::InsufficientData(_)
            | Error::InvalidInput(_) => 2,
            Error::InvalidDimension(_)
            | Error::SingularMatrix { .. }
            | Error::OutOfSupport { .. }
            | Error::DegenerateDistribution { .. }
            | Error::Precondition(_) => 3,
            Error::Invariant(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
