use thiserror::Error;

/// Everything a subcommand can fail with, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config entries or parameter values.
    #[error("usage: {0}")]
    Usage(String),
    /// A numerical routine failed or hit its resource budget.
    #[error("numerical failure: {0}")]
    Numeric(String),
    #[error("i/o: {0}")]
    Io(String),
    /// Artifacts were written but at least one acceptance threshold failed.
    #[error("acceptance failure:\n{0}")]
    Acceptance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Acceptance(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

impl From<bell_halfline::Error> for CliError {
    fn from(e: bell_halfline::Error) -> Self {
        use bell_halfline::Error as E;
        match e {
            // Out-of-domain parameters come from the user's input.
            E::Domain { .. } | E::Precondition(_) => CliError::Usage(e.to_string()),
            E::Evaluation { .. } | E::Resource(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
