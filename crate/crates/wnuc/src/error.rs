use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("degenerate angle: {0}")]
    DegenerateAngle(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("undefined: {0}")]
    Undefined(String),
}

pub type Result<T> = std::result::Result<T, Error>;
