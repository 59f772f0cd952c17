use thiserror::Error;

/// Failures that stop a run; all of them exit with status 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{context}: {source}")]
    Input {
        context: String,
        #[source]
        source: freewalk::Error,
    },

    #[error(transparent)]
    Core(#[from] freewalk::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn input(context: impl Into<String>, source: freewalk::Error) -> Self {
        CliError::Input { context: context.into(), source }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
