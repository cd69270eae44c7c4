use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Library(#[from] nilwave::Error),

    #[error("degenerate window: {0}")]
    Degenerate(String),

    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn config(key: &str, message: impl std::fmt::Display) -> Self {
        CliError::Config {
            key: key.to_string(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 for a failed check, 2 for configuration, input and I/O problems.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Degenerate(_) | CliError::ChecksFailed(_) => 1,
            CliError::Library(nilwave::Error::Degenerate(_)) => 1,
            _ => 2,
        }
    }
}
