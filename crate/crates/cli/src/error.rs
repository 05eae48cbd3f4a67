use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {}", path.display())]
    Parse {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Model(#[from] fairfluid::Error),
    #[error("unknown repro `{0}` (expected prop1, prop2, pof or theorem1)")]
    UnknownRepro(String),
    #[error("invalid policy `{spec}`: {reason}")]
    PolicySpec { spec: String, reason: String },
    #[error("write: {0}")]
    Write(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
