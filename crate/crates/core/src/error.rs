use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("input contains no edges or nodes")]
    EmptyInput,

    #[error("edge references unknown node id {0}")]
    UnknownNode(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid generator parameters: {0}")]
    InvalidParams(String),

    #[error("state space of 2^{bits} configurations exceeds the enumeration limit of 2^{limit}")]
    StateSpaceTooLarge { bits: usize, limit: usize },

    #[error("contract violation: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
