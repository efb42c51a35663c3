use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("unsupported schema_version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] nvhmeta::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Read { .. } => "read",
            CliError::Schema { .. } | CliError::Version { .. } => "config",
            CliError::Usage(_) => "usage",
            CliError::Core(_) => "library",
            CliError::Io(_) => "io",
            CliError::Json(_) => "json",
            CliError::Csv(_) => "csv",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Schema { .. } | CliError::Version { .. } | CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    /// Single-line JSON report for stderr.
    pub fn report(&self) -> serde_json::Value {
        let mut err = serde_json::json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        if let CliError::Schema { path, .. } = self {
            err["path"] = path.clone().into();
        }
        serde_json::json!({ "error": err })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
