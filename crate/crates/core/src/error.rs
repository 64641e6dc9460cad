use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty word")]
    EmptyWord,
    #[error("domain: {what} = {value} outside [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("index {index} out of range 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("subset indices must be strictly increasing")]
    UnsortedSubset,
    #[error("subset universe {universe} does not match word length {len}")]
    UniverseMismatch { universe: usize, len: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{qubits} qubits exceeds the cap of {cap}")]
    QubitCap { qubits: usize, cap: usize },
    #[error("malformed qubit layout: {0}")]
    Layout(&'static str),
    #[error("empty set")]
    EmptySet,
    #[error("empty input")]
    EmptyInput,
    #[error("no blocks accepted")]
    NoAcceptedBlocks,
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
}
