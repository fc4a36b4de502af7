use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain parameter: {0}")]
    Domain(String),

    #[error("non-finite value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("initial condition is negative: min {value:e} at x = {x}")]
    SignViolation { x: f64, value: f64 },

    #[error("initial condition is identically zero")]
    Trivial,

    #[error("support [{x0}, {x1}] touches the periodic boundary of [{left}, {right}]")]
    SupportAtBoundary {
        x0: f64,
        x1: f64,
        left: f64,
        right: f64,
    },

    #[error("not enough records: {0}")]
    InsufficientRecords(String),
}

pub type Result<T> = std::result::Result<T, Error>;
