//! Error types.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("malformed dyadic literal `{0}`")]
    Dyadic(String),
    #[error("malformed decimal literal `{0}`")]
    Decimal(String),
    #[error("`{0}` is not an exact dyadic rational")]
    NotDyadic(String),
    #[error("malformed cover file: {0}")]
    Cover(String),
    #[error("malformed map file: {0}")]
    Map(String),
    #[error("malformed certificate file: {0}")]
    Certificate(String),
}

/// Errors raised by rigorous evaluation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("denominator ball contains zero")]
    DenominatorVanishes,
    #[error("precision exhausted after {retries} retries at {work_bits} bits")]
    PrecisionExhausted { retries: u32, work_bits: u32 },
    #[error("preimage root finding did not converge")]
    RootFindingFailure,
    #[error("point lies inside the cover")]
    PointInsideCover,
    #[error("cover is empty")]
    EmptyCover,
    #[error("pixel subdivision exceeded {0} evaluations")]
    SubdivisionLimit(u64),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CertificateError {
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("insufficient samples: {0} orbit exits observed, need at least 10")]
    InsufficientSamples(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Top-level error for file-based workflows.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Certificate(#[from] CertificateError),
    #[error("certificate failed validation: {0}")]
    CertificateInvalid(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Usage(String),
}
