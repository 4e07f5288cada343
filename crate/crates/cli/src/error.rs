use std::path::Path;
use std::process::ExitCode;

use lptd_core::simnet::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Exit 3: the scenario or flags are invalid.
    #[error("config error: {0}")]
    Config(String),
    /// Exit 1: I/O failure or a run that could not complete.
    #[error("run error: {0}")]
    Run(String),
    /// Exit 2: the run completed but a checked property did not hold.
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self::Run(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Run(_) => 1,
            Self::Verify(_) => 2,
            Self::Config(_) => 3,
        })
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config(e.to_string())
    }
}
