use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = NeedError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum NeedError {
    /// Input file does not have the declared layout.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("duplicate observation for {country} in {year}")]
    DuplicateObservation { country: String, year: i32 },

    #[error("unknown country '{name}'; nearest matches: {}", suggestions.join(", "))]
    UnknownCountry {
        name: String,
        suggestions: Vec<String>,
    },

    /// Bad argument or configuration value.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Not enough usable data for the requested computation.
    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("config error for key '{key}': {message}")]
    Config { key: String, message: String },

    #[error("missing upstream artifact {}; run `need {stage}` first", path.display())]
    MissingArtifact { path: PathBuf, stage: &'static str },

    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<NeedError>,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl NeedError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        NeedError::Invalid(msg.into())
    }

    pub fn insufficient(msg: impl Into<String>) -> Self {
        NeedError::Insufficient(msg.into())
    }

    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        NeedError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Wraps an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Self {
        match self {
            e @ NeedError::Stage { .. } => e,
            e => NeedError::Stage {
                stage,
                source: Box::new(e),
            },
        }
    }

    /// Process exit code: 1 validation, 2 data, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            NeedError::Invalid(_)
            | NeedError::Config { .. }
            | NeedError::MissingArtifact { .. }
            | NeedError::UnknownCountry { .. } => 1,
            NeedError::Schema(_)
            | NeedError::DuplicateObservation { .. }
            | NeedError::Insufficient(_)
            | NeedError::Csv(_) => 2,
            NeedError::Json(_) | NeedError::Io(_) => 3,
            NeedError::Stage { source, .. } => source.exit_code(),
        }
    }
}
