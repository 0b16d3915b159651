use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("fixture {0} failed")]
    FixtureFailed(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), message: e.to_string() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Io { .. } => 3,
            CliError::FixtureFailed(_) => 4,
        }
    }
}

impl From<rwre::Error> for CliError {
    fn from(e: rwre::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}
