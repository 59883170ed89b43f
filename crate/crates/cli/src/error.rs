use oamturb::OamError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed or semantically invalid configuration.
    #[error("config error: {0}")]
    Schema(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] OamError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Core(OamError::Resolution(_)) => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
