use std::path::PathBuf;

use thiserror::Error;

/// Problems found while reading or validating a configuration document.
#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed configuration: {0}")]
    Parse(String),

    #[error("invalid field `{field}`: {reason}")]
    Field { field: String, reason: String },

    #[error("unknown {kind} preset `{name}` (known: {known})")]
    UnknownPreset {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ConfigError {
    pub(crate) fn field(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Field {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),

    /// A caller asked for an action outside an operation's domain.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("link infeasible: rate {rate} b/s requested on a zero-gain channel")]
    InfeasibleLink { rate: f64 },

    #[error("non-finite value in `{what}` at slot {slot}")]
    NonFinite { slot: u64, what: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
