use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point:?} lies outside the domain (axis {axis})")]
    OutsideDomain { point: Vec<f64>, axis: usize },

    #[error("batch element {index}: {source}")]
    Batch {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate function: {0}")]
    Degenerate(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("training failed: {0}")]
    Training(String),

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("excluded: {0}")]
    Excluded(String),

    #[error("generator error: {0}")]
    Generator(#[from] crate::generator::GeneratorError),

    #[error("config error: {0}")]
    Config(String),

    #[error("upstream service failure: {0}")]
    Upstream(String),

    #[error("missing artifact: {0}")]
    MissingArtifact(String),

    #[error("io error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
