use std::path::PathBuf;

use varexp_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed or unreadable configuration, bad flags.
    #[error("config error: {0}")]
    Config(String),
    /// Inputs are well-formed but a precondition of the command fails.
    #[error("{0}")]
    Precondition(String),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Precondition(_) => 1,
            CliError::Config(_) | CliError::Io { .. } => 2,
        }
    }

    /// Engine failures: blow-ups and domain errors are precondition failures,
    /// anything else points at the configuration.
    pub(crate) fn from_core(context: &str, e: CoreError) -> Self {
        match e {
            CoreError::BlowUp { .. } | CoreError::Domain { .. } | CoreError::NoSolution { .. } => {
                CliError::Precondition(format!("{context}: {e}"))
            }
            _ => CliError::Config(format!("{context}: {e}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
