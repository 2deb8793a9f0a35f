//! Front end for the `orlicz` binary: config parsing and command dispatch.

pub mod config;
pub mod run;

pub use config::{parse_config, Command, GridSpec, Options, RunConfig};
pub use run::{run, Outcome, Status};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid config: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(orlicz::Error),
}

impl From<orlicz::Error> for CliError {
    fn from(e: orlicz::Error) -> Self {
        match e {
            orlicz::Error::Validation(v) => CliError::Validation(v),
            orlicz::Error::Parse { line, column, message } => CliError::Parse { line, column, message },
            other => CliError::Core(other),
        }
    }
}

impl CliError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
