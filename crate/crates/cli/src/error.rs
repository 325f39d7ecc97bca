use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid `{field}`: {message}")]
    Config { field: &'static str, message: String },
    #[error("config file: {0}")]
    ConfigFile(String),
    #[error(transparent)]
    Model(#[from] gkpsim::Error),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(field: &'static str, message: impl Into<String>) -> Self {
        Self::Config {
            field,
            message: message.into(),
        }
    }

    /// 2 for anything the user can fix in the configuration, 3 for requests
    /// beyond the enumeration or memory bounds.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::ConfigFile(_) => 2,
            Self::Model(gkpsim::Error::Resource(_)) => 3,
            Self::Model(_) => 2,
            Self::Io(_) | Self::Json(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
