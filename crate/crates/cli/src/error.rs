use std::fmt;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Precondition failure reported by the numerical core.
    #[error("{name}: {0}", name = .0.name())]
    Core(#[from] abelian_coh::Error),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(_) => 2,
            _ => 1,
        }
    }

    pub fn parse(path: impl fmt::Display, message: impl fmt::Display) -> Self {
        CliError::Parse {
            path: path.to_string(),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl fmt::Display, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_string(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
