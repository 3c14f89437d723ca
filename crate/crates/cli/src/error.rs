use std::fmt;
use std::path::PathBuf;

/// Exit codes: 0 ok, 1 bad input, 2 size cap, 3 unsupported regime,
/// 4 validation failed.
#[derive(Debug)]
pub enum CliError {
    Core(esmt_core::Error),
    Io(PathBuf, std::io::Error),
    Usage(String),
    Mismatch(String),
    Unsupported(String),
    CheckFailed,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_cap_violation() => 2,
            CliError::Unsupported(_) => 3,
            CliError::CheckFailed => 4,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Mismatch(m) => write!(f, "tree and instance disagree: {m}"),
            CliError::Unsupported(m) => write!(f, "unsupported regime: {m}"),
            CliError::CheckFailed => write!(f, "validation failed"),
        }
    }
}

impl From<esmt_core::Error> for CliError {
    fn from(e: esmt_core::Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
