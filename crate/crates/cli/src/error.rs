use plasmodicke_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("invariant failure: {0}")]
    Invariant(String),

    #[error("non-convergence: {0}")]
    NonConvergence(String),

    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Invariant(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    /// Wraps a core error with the scenario it came from.
    pub fn from_core(context: &str, e: CoreError) -> Self {
        let msg = format!("{context}: {e}");
        match e {
            CoreError::Geometry(_) | CoreError::Parameter { .. } | CoreError::ModeOutOfRange(_) | CoreError::Dimension(_) => {
                CliError::Config(msg)
            }
            CoreError::VanishingCoupling { .. }
            | CoreError::NotPositiveSemidefinite { .. }
            | CoreError::NotSymmetric(..)
            | CoreError::InvariantBreach(_) => CliError::Invariant(msg),
            CoreError::NoResonance(_) | CoreError::NonConvergence(_) => CliError::NonConvergence(msg),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io { path: path.as_ref().display().to_string(), source }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
