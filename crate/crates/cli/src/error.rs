use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration; `location` names the flag or file position.
    #[error("configuration error at {location}: {message}")]
    Config { location: String, message: String },

    #[error(transparent)]
    Library(#[from] censorlap::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialize(String),

    /// A check ran and did not pass.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use censorlap::Error as E;
        match self {
            CliError::Config { .. } => 2,
            // precondition violations are configuration errors
            CliError::Library(
                E::Domain(_)
                | E::OutsideDomain { .. }
                | E::ExcisionTooLarge { .. }
                | E::PositivityViolation { .. }
                | E::Unsupported(_),
            ) => 2,
            _ => 1,
        }
    }
}
