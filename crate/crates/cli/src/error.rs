use std::fmt;

use ttlab_core::fronts::FrontError;
use ttlab_core::io::FormatError;
use ttlab_core::rigidity::RigidityError;
use ttlab_core::scene::SceneError;

/// Failure of a command, carrying its exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or inconsistent options: exit 1.
    Usage(String),
    /// Input that fails schema or scene validation: exit 2.
    Validation(String),
    /// Anything that goes wrong while running: exit 3.
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => 1,
            Self::Validation(_) => 2,
            Self::Runtime(_) => 3,
        }
    }

    pub fn runtime(context: impl fmt::Display, e: impl fmt::Display) -> Self {
        Self::Runtime(format!("{context}: {e}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Usage(m) | Self::Validation(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SceneError> for CliError {
    fn from(e: SceneError) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        match e {
            FormatError::Io(e) => Self::Runtime(e.to_string()),
            other => Self::Validation(other.to_string()),
        }
    }
}

impl From<RigidityError> for CliError {
    fn from(e: RigidityError) -> Self {
        match e {
            RigidityError::IncomparableSpecs(_) | RigidityError::Unsupported(_) => Self::Validation(e.to_string()),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<FrontError> for CliError {
    fn from(e: FrontError) -> Self {
        Self::Runtime(e.to_string())
    }
}
