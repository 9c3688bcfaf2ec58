use std::path::PathBuf;

use thiserror::Error;

/// Everything that can stop a run. [`CliError::exit_code`] maps each case to
/// the process status: 2 for configuration problems, 1 for numerical failures.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("key `{key}` expects {expected}, got `{value}`")]
    TypeMismatch { key: String, expected: String, value: String },

    #[error("{origin}:{line}: {msg}")]
    Syntax { origin: String, line: usize, msg: String },

    #[error("cannot read config file {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("output directory {path} is not writable: {source}")]
    Unwritable { path: PathBuf, source: std::io::Error },

    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] decoh_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(decoh_core::Error::Config(_) | decoh_core::Error::Stability { .. }) => 2,
            CliError::Core(_) => 1,
            _ => 2,
        }
    }
}
