use std::fmt;

use toda_core::TodaError;

/// Exit code 2 for `Input`, 1 for `Failure`.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Failure(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failure(_) => 1,
        }
    }

    /// A computation error; malformed arguments surfacing from the core count as input errors.
    pub fn compute(e: TodaError) -> Self {
        match e {
            TodaError::InvalidInput(_) | TodaError::DimensionMismatch { .. } | TodaError::BadSignature { .. } => {
                CliError::Input(format!("{}: {e}", e.name()))
            }
            _ => CliError::Failure(format!("{}: {e}", e.name())),
        }
    }

    pub fn input(e: TodaError) -> Self {
        CliError::Input(format!("{}: {e}", e.name()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}
