use thiserror::Error;

/// Errors raised anywhere in the crate.
///
/// `ResourceGuard`, `FieldTooSmall`, `Parse` and `VerificationFailed` get
/// their own exit codes in the command-line tool.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands live in different fields ({0} vs {1})")]
    MixedFields(String, String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} is out of range (need a prime below 2^31)")]
    ModulusOutOfRange(u64),
    #[error("operation needs a finite field")]
    InfiniteField,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("tensor is zero")]
    ZeroTensor,
    #[error("matrix space is zero")]
    ZeroSpan,
    #[error("matrix is zero")]
    ZeroMatrix,
    #[error("slice space has dimension {have}, expected {need}")]
    DegenerateSpan { need: usize, have: usize },
    #[error("tensor is not concise")]
    NotConcise,
    #[error("tensor is not cubical")]
    NotCubical,
    #[error("tensor is not pivot-matched")]
    NotPivotMatched,
    #[error("unsupported dimensions: {0}")]
    BadDims(String),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("field has {have} elements, need more than {need}")]
    FieldTooSmall { need: u64, have: u64 },
    #[error("resource guard: {what} needs {needed}, limit is {limit}")]
    ResourceGuard { what: String, needed: String, limit: String },
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("witness rejected: {0}")]
    WitnessInvalid(String),
    #[error("dimension {n} is below the threshold {threshold}")]
    BelowThreshold { n: usize, threshold: String },
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("search gave up: {0}")]
    SearchExhausted(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn guard(what: &str, needed: impl ToString, limit: impl ToString) -> Self {
        Error::ResourceGuard {
            what: what.to_string(),
            needed: needed.to_string(),
            limit: limit.to_string(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse { line, msg: msg.into() }
    }
}
