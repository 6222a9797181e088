use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] pseudoent_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Config(String),

    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("envelope format {found:?}, expected {expected:?}")]
    Version { expected: String, found: String },

    #[error("envelope holds a {found:?}, expected a {expected:?}")]
    Kind { expected: String, found: String },

    #[error("checksum mismatch: header says {expected}, payload hashes to {found}")]
    Checksum { expected: String, found: String },

    #[error("malformed envelope: {0}")]
    Envelope(String),

    #[error("scoring needs the ledger entry for key {0}")]
    MissingLedgerEntry(String),

    #[error("ledger {ledger} would sit beside public key files in {keys}")]
    Colocated { ledger: PathBuf, keys: PathBuf },
}

pub type Result<T> = std::result::Result<T, HarnessError>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
    let path = path.into();
    move |source| HarnessError::Io { path, source }
}
