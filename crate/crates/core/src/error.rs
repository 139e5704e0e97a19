use thiserror::Error;

/// Errors raised by constructors and operations in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("depth {depth} exceeds the cap of {cap} for this representation")]
    DepthCap { depth: usize, cap: usize },
    #[error("operation needs at least one qubit")]
    ZeroQubits,
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),
    #[error("trace {0} differs from one")]
    BadTrace(f64),
    #[error("matrix is not a projection (max |P^2 - P| = {0:e})")]
    NotProjection(f64),
    #[error("vectors are not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("level {level} is not the partial trace of level {next} (max deviation {deviation:e})")]
    Incoherent { level: usize, next: usize, deviation: f64 },
    #[error("range of level {level} tensored with I is not contained in level {next} (deviation {deviation:e})")]
    NotNested { level: usize, next: usize, deviation: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("bitstring of length {len} is shorter than the requested depth {depth}")]
    BitstringTooShort { len: usize, depth: usize },
    #[error("bad bitstring {0:?}")]
    BadBitstring(String),
    #[error("operation requires a {expected} state")]
    WrongKind { expected: &'static str },
    #[error("operation is not defined for the {0} discipline")]
    WrongDiscipline(String),
    #[error("mass certificate violated: {0}")]
    MassViolation(String),
    #[error("seed vector {index} is outside the threshold set (<u|V|u> = {value}, threshold {threshold})")]
    SeedBelowThreshold { index: usize, value: f64, threshold: f64 },
    #[error("preconditions violated: {}", .0.join("; "))]
    Preconditions(Vec<String>),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
