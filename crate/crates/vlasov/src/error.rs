//! Failure classes of the command line and their exit codes.

use thiserror::Error;

use crate::config::ConfigError;
use crate::output::OutputError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(#[from] vlasov_core::Error),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{failed} of {total} claims failed")]
    Verification { failed: usize, total: usize },
}

impl CliError {
    /// 1 for usage and configuration errors, 2 for numerical and I/O
    /// failures, 3 when a verification claim fails.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Numerical(_) | CliError::Output(_) => 2,
            CliError::Verification { .. } => 3,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), 1);
        let invalid = ConfigError::Invalid {
            field: "grid.nE",
            reason: "too small".into(),
        };
        assert_eq!(CliError::from(invalid).exit_code(), 1);
        assert_eq!(CliError::from(vlasov_core::Error::NotIntegrable).exit_code(), 2);
        assert_eq!(CliError::Verification { failed: 1, total: 3 }.exit_code(), 3);
    }
}
