use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    /// The config is unreadable or violates the schema; `field` names the culprit.
    #[error("invalid config at `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("unknown example `{0}`; see `list-examples`")]
    UnknownExample(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] superdiff_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn config_error(field: impl Into<String>, message: impl Into<String>) -> LabError {
    LabError::Config {
        field: field.into(),
        message: message.into(),
    }
}
