use radiant_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid `{key}`: {reason}")]
    Validation { key: String, reason: String },
    #[error("{0}")]
    Runtime(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn validation(key: &str, reason: impl Into<String>) -> Self {
        CliError::Validation { key: key.to_string(), reason: reason.into() }
    }

    #[cfg(test)]
    pub fn key(&self) -> Option<&str> {
        match self {
            CliError::Validation { key, .. } => Some(key),
            _ => None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation { .. } => 2,
            _ => 1,
        }
    }
}

/// During validation, parameter errors raised by the numerical modules are
/// reported as validation errors; anything else is a runtime failure.
pub fn during_validation(e: Error) -> CliError {
    match e {
        Error::InvalidParameter { key, reason } => CliError::validation(key, reason),
        other => CliError::Runtime(other),
    }
}
