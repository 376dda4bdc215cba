use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary: ||U U^dag - 1|| = {deviation:.3e}")]
    NonUnitary { deviation: f64 },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("qubit pair ({i}, {j}) out of range for {n} qubits")]
    QubitIndex { i: usize, j: usize, n: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("identity operator has no estimation variance (empty support)")]
    DegenerateOperator,

    #[error("invalid support: {0}")]
    InvalidSupport(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("parse error at line {line} (byte offset {offset}): {msg}")]
    Parse { line: usize, offset: usize, msg: String },

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("incompatible checkpoint: {0}")]
    Incompatible(String),

    #[error("refusing statevector simulation of {n} qubits (cap is {max})")]
    TooManyQubits { n: usize, max: usize },

    #[error("internal error: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
