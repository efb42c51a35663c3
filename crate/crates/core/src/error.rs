use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: missing column `{0}`")]
    MissingColumn(String),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("selection error: unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("spec error: {0}")]
    Spec(String),

    #[error("record {index}: {source}")]
    AtRecord {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ill-conditioned normal equations (condition estimate {condition:.3e})")]
    Conditioning { condition: f64 },

    #[error("partition error: {0}")]
    Partition(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("sampler initialization failed in chain {chain}: {message}")]
    Initialization { chain: usize, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("extrapolation error: {0}")]
    Extrapolation(String),

    #[error("comparison error: {0}")]
    Comparison(String),

    #[error("point fit failed: {0}")]
    PointFit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_record(index: usize, source: Error) -> Self {
        Error::AtRecord { index, source: Box::new(source) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
