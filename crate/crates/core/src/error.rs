use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("malformed literal: {0}")]
    MalformedLiteral(String),
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u32, u32),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("value is not a unit")]
    NotAUnit,
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("point is not in ball {0}")]
    NotInBall(String),
    #[error("invalid direction: k1 must be nonzero")]
    InvalidDirection,
    #[error("not a set S: {0}")]
    NotASetS(String),
    #[error("degenerate basis: {0}")]
    DegenerateBasis(String),
    #[error("enumeration of {0} elements exceeds the cap of {1}")]
    EnumerationCap(u128, u128),
    #[error("invalid child action: {0}")]
    InvalidAction(String),
    #[error("invalid wavelet index: {0}")]
    InvalidIndex(String),
    #[error("missing cells: expected {expected}, got {got}")]
    MissingCells { expected: usize, got: usize },
    #[error("unsupported dimension {0}: {1}")]
    UnsupportedDimension(usize, &'static str),
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),
    #[error("divergent kernel: {0}")]
    DivergentKernel(String),
    #[error("morphism is not mod-p-affine at {0}")]
    NotAffine(String),
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;
