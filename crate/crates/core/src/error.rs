use thiserror::Error;

/// Subset of sources whose mass exceeds the mass of its admissible neighbourhood.
#[derive(Debug, Clone, PartialEq)]
pub struct HallWitness {
    pub sources: Vec<usize>,
    pub source_mass: f64,
    pub neighbour_mass: f64,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("cost is not twisted at this pair: {0}")]
    Twist(String),
    #[error("transport problem is infeasible: {0}")]
    Infeasible(String),
    #[error("admissible plan does not exist: sources {:?} carry mass {} but reach only {}", .0.sources, .0.source_mass, .0.neighbour_mass)]
    HallViolation(HallWitness),
    #[error("marginal mismatch: {0}")]
    Marginal(String),
    #[error("certificate failure: {0}")]
    Certificate(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("size limit exceeded: {0}")]
    SizeLimit(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
