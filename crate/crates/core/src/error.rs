use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("loop edge at vertex {0}")]
    LoopEdge(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("graphs overlap on edge ({0}, {1})")]
    OverlappingEdges(usize, usize),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("not a permutation of 0..{0}")]
    NotAPermutation(usize),
    #[error("empty graph: n must be at least 1")]
    EmptyVertexSet,
    #[error("invalid degree sequence: {0}")]
    InvalidDegreeSequence(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("no convergence after {0} sweeps")]
    NoConvergence(usize),
    #[error("matrix is singular")]
    Singular,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("parity error: n * d = {n} * {d} is odd")]
    ParityError { n: usize, d: usize },
    #[error("degree {d} infeasible for n = {n}")]
    DegreeOutOfRange { n: usize, d: usize },
    #[error("instance too large: {0}")]
    TooLarge(String),
    #[error("rejection budget of {0} attempts exceeded")]
    RejectionBudgetExceeded(u64),
    #[error("degree sum {got} does not equal n - 1 = {expected}")]
    DegreeSumMismatch { got: usize, expected: usize },

    #[error("domain error: {0}")]
    DomainError(String),
    #[error("regime violation: {0}")]
    RegimeViolation(String),

    #[error("constraint has an empty side")]
    EmptySide,
    #[error("invalid switching choice: {0}")]
    InvalidChoice(String),
}

pub type Result<T> = std::result::Result<T, Error>;
