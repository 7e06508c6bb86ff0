use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("validity violated: {0} (rerun with --force to proceed)")]
    Violated(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Violated(_) => 3,
            CliError::Numerical(_) | CliError::Io(_) => 4,
        }
    }

    /// Core errors: bad inputs are configuration problems, the rest numerical.
    pub fn from_core(context: &str, e: georabi::Error) -> Self {
        match e {
            georabi::Error::InvalidInput(m) => CliError::Config(format!("{context}: {m}")),
            other => CliError::Numerical(format!("{context}: {other}")),
        }
    }
}
