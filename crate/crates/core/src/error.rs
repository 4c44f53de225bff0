use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("exact oracle budget exceeded: n = {n} > {max}")]
    OracleBudget { n: usize, max: usize },

    #[error("instance {name}: recorded optimum {recorded} disagrees with oracle optimum {computed}")]
    OptimumMismatch {
        name: String,
        recorded: i64,
        computed: i64,
    },

    #[error("{qubits} qubits exceeds the simulator cap of {cap}")]
    QubitCap { qubits: usize, cap: usize },

    #[error("parameter vector has length {actual}, expected {expected}")]
    ParameterLength { expected: usize, actual: usize },

    #[error("empty sample set")]
    EmptySamples,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
