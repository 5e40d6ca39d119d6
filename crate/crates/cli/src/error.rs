use std::fmt;

/// Failure of a subcommand, split by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration or input data (exit code 1).
    Invalid(String),
    /// Failure while computing or writing results (exit code 2).
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            CliError::Invalid(m) | CliError::Runtime(m) => m,
        };
        // Keep the message on one line for the "ERROR:" contract.
        write!(f, "{}", msg.replace('\n', " "))
    }
}

impl From<cgp::Error> for CliError {
    fn from(e: cgp::Error) -> Self {
        match e {
            cgp::Error::ZeroWeights | cgp::Error::Domain(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Invalid(e.to_string()),
        }
    }
}

pub fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

pub type CliResult<T> = Result<T, CliError>;
