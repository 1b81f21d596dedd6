use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid chain parameters: {0}")]
    InvalidParams(String),
    #[error("invalid twist: {0}")]
    InvalidTwist(String),
    #[error("chain length {0} exceeds the dense maximum {1}")]
    Dimension(usize, usize),
    #[error("separation of variables not applicable: {0}")]
    SovInapplicable(String),
    #[error("no polynomial solution of the TQ relation up to degree {0}")]
    NoNullspace(usize),
    #[error("degenerate spectrum or nullspace: {0}")]
    Degenerate(String),
    #[error("pole encountered: {0}")]
    Pole(String),
    #[error("no convergence: {0}")]
    NoConvergence(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;
