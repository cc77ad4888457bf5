use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] casimir_reduce::Error),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    /// 2 for bad input, 3 for numerical failures, 4 for failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Verification(_) => 4,
        }
    }
}
