use thiserror::Error;

#[derive(Debug, Error)]
pub enum PcsmError {
    #[error("element {element} out of range for a ground set of size {n}")]
    ElementOutOfRange { element: usize, n: usize },
    #[error("element {0} is already in the base set")]
    ElementInBase(usize),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{kind} row {row} has a zero bound")]
    ZeroBound { kind: &'static str, row: usize },
    #[error("instance has {n} elements; the limit for this operation is {max}")]
    TooLarge { n: usize, max: usize },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("numeric breakdown: {0}")]
    Numeric(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, PcsmError>;
