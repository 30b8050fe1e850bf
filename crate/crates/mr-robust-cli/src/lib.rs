//! Library half of the `mr-robust` command-line tool.
//!
//! The binary is a thin shell over these modules so integration tests can
//! exercise parsing, report construction, and the two commands directly.

pub mod analyze;
pub mod io;
pub mod report;
pub mod simulate;

use std::fmt;

/// A command failure, classified for the exit code and the machine-parsable
/// stderr prefix: `usage` and `input` exit 1, `compute` exits 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Flag misuse or malformed invocation.
    Usage(String),
    /// Unreadable or invalid input data or configuration.
    Input(String),
    /// A numerical failure inside the statistics.
    Compute(String),
}

impl CliError {
    /// The stable code token printed as `error[<code>]: …`.
    pub fn code(&self) -> &'static str {
        match self {
            Self::Usage(_) => "usage",
            Self::Input(_) => "input",
            Self::Compute(_) => "compute",
        }
    }

    /// Process exit status for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Input(_) => 1,
            Self::Compute(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Input(m) | Self::Compute(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

/// Maps a library error to a CLI failure class: numerical breakdowns are
/// internal (`compute`, exit 2); everything else traces back to the inputs.
pub fn classify(error: mr_robust::Error) -> CliError {
    match error {
        mr_robust::Error::Numerical(_) => CliError::Compute(error.to_string()),
        _ => CliError::Input(error.to_string()),
    }
}
