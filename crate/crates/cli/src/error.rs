use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gpc_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("malformed {what} file {}: {source}", path.display())]
    Parse {
        what: &'static str,
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{0}")]
    CheckFailed(String),
}

impl From<std::io::Error> for CliError {
    fn from(source: std::io::Error) -> Self {
        CliError::Io {
            path: PathBuf::from("<output>"),
            source,
        }
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        use gpc_core::Error as E;
        match self {
            CliError::Core(E::SvdNonConvergence { .. }) => "E_SOLVER",
            CliError::Core(E::NonInjective { .. }) => "E_UNSUPPORTED",
            CliError::Core(E::UnknownScenario(_)) => "E_UNKNOWN_SCENARIO",
            CliError::Core(_) | CliError::Parse { .. } | CliError::Usage(_) => "E_INPUT",
            CliError::Io { .. } | CliError::Csv(_) => "E_IO",
            CliError::CheckFailed(_) => "E_CHECK",
        }
    }

    /// 2 for solver failures, 3 when a requested check ran and failed, 1 otherwise.
    pub fn exit_status(&self) -> u8 {
        match self {
            CliError::Core(gpc_core::Error::SvdNonConvergence { .. }) => 2,
            CliError::CheckFailed(_) => 3,
            _ => 1,
        }
    }
}
