use thiserror::Error;

pub type Result<T> = std::result::Result<T, CrspError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CrspError {
    #[error("qubit index {index} out of range for {num_qubits}-qubit state")]
    QubitOutOfRange { index: usize, num_qubits: usize },

    #[error("duplicate qubit index {0} in measurement target")]
    DuplicateQubit(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("amplitude vector length {0} is not a power of two >= 2")]
    BadLength(usize),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("degenerate measurement basis: {0}")]
    DegenerateBasis(String),

    #[error("outcome {outcome} out of range for basis of size {size}")]
    OutcomeOutOfRange { outcome: usize, size: usize },

    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),

    #[error("invalid target: {0}")]
    InvalidTarget(String),

    #[error("degenerate target: m = sqrt(delta^2+eta^2)/sqrt(alpha^2+beta^2) is undefined ({0})")]
    DegenerateTarget(String),

    #[error("no correction-table row for {protocol} with alice={alice}, charlie={charlie:?}")]
    LookupMiss {
        protocol: String,
        alice: usize,
        charlie: Vec<usize>,
    },

    #[error("protocol mismatch: {0}")]
    ProtocolMismatch(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CrspError {
    fn from(e: std::io::Error) -> Self {
        CrspError::Io(e.to_string())
    }
}
