use thiserror::Error;

/// Failure modes shared by every module. The CLI maps these onto exit codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("insufficient grid resolution: {0}")]
    Resolution(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    /// True for errors caused by the caller's inputs rather than by the numerics.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::Assembly(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
