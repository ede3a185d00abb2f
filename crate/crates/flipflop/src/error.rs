use std::path::PathBuf;

use flipflop_core::Error as CoreError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("I/O error: {0}")]
    Stream(#[from] std::io::Error),
    #[error("malformed {what}: {msg}")]
    Format { what: &'static str, msg: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid setting: {0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl Error {
    pub(crate) fn format(what: &'static str, msg: impl Into<String>) -> Self {
        Error::Format { what, msg: msg.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    /// Process exit status: 2 for bad input or configuration, 3 for numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Core(e) => core_exit_code(e),
            _ => 2,
        }
    }
}

fn core_exit_code(e: &CoreError) -> u8 {
    match e {
        CoreError::Mode { source, .. } => core_exit_code(source),
        CoreError::CertificationFailed { .. }
        | CoreError::SingularTrailingBlock { .. }
        | CoreError::NonFinite(_)
        | CoreError::OracleTooLarge(_) => 3,
        _ => 2,
    }
}
