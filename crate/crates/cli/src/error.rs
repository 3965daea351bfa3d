use thiserror::Error;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable, malformed or schema-invalid input, or a bad flag value.
    #[error("{0}")]
    Input(String),
    /// Input matrices that are not symmetric positive definite.
    #[error("{0}")]
    Numeric(String),
    /// Two routes that must agree did not.
    #[error("{0}")]
    Consistency(String),
    /// A statistical check ran and failed.
    #[error("{0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Consistency(_) => 4,
            CliError::CheckFailed(_) => 1,
        }
    }
}

impl From<cmseq::Error> for CliError {
    fn from(e: cmseq::Error) -> Self {
        match e {
            cmseq::Error::NotPositiveDefinite { .. } | cmseq::Error::NotSymmetric { .. } => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
