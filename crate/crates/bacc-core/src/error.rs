use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid interval: [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("degenerate nodes: {0}")]
    DegenerateNodes(String),

    #[error("no explicit weight formula for node kind {0}")]
    UnsupportedKind(&'static str),

    #[error("non-finite input: {0}")]
    NonFiniteInput(String),

    #[error("evaluation point {x} coincides with node {index}")]
    NodeCoincidence { x: f64, index: usize },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// The exact polynomial-coded baseline cannot decode below its recovery
    /// threshold. The rational scheme has no such failure mode.
    #[error("recovery threshold not met: need {needed} results, got {got}")]
    RecoveryThreshold { needed: usize, got: usize },

    #[error("parameters out of regime: {0}")]
    OutOfRegime(String),

    #[error("too few nodes: need at least {needed}, got {got}")]
    TooFewNodes { needed: usize, got: usize },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("infeasible replication layout: {0}")]
    InfeasibleReplication(String),

    #[error("worker {worker} produced a non-finite result")]
    WorkerFailure { worker: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    MalformedFile(String),
}
