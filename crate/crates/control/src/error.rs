use thiserror::Error;

#[derive(Debug, Error)]
pub enum ControlError {
    #[error(transparent)]
    Core(#[from] handtwin_core::Error),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("bad frame: {0}")]
    Frame(String),

    #[error("invalid command: {0}")]
    Command(String),
}

pub type Result<T, E = ControlError> = std::result::Result<T, E>;
