use bandlab::Error;

/// Failure classes mapped onto process exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::CheckFailed(_) | CliError::Io(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::SizeCap(_) => CliError::Validation(e.to_string()),
            Error::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            Error::Algorithm(_) => CliError::CheckFailed(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn library_errors_map_to_exit_codes() {
        let invalid = Error::InvalidParameter { field: "ensemble.W".into(), message: "too wide".into() };
        assert_eq!(CliError::from(invalid).exit_code(), 1);
        assert_eq!(CliError::from(Error::SizeCap("N".into())).exit_code(), 1);
        let stalled = Error::NonConvergence { what: "lanczos".into(), iterations: 3, estimate: 2.0, residual: 1.0 };
        assert_eq!(CliError::from(stalled).exit_code(), 3);
        assert_eq!(CliError::from(Error::Algorithm("greedy".into())).exit_code(), 2);
        assert_eq!(CliError::CheckFailed("x".into()).exit_code(), 2);
        assert_eq!(CliError::NonConvergence("x".into()).exit_code(), 3);
    }
}
