use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is singular (pivot {pivot:e} below tolerance)")]
    SingularMatrix { pivot: f64 },

    #[error("unsupported image kind: {0}")]
    UnsupportedImage(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("measure {measure} is incompatible with domain {domain}")]
    IncompatibleMeasure { measure: String, domain: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate triangle at fan index {0}")]
    DegenerateTriangle(usize),

    #[error("point lies outside the domain")]
    OutsideDomain,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("Cholesky factorization failed at row {row}: basis or moments are inconsistent")]
    Cholesky { row: usize },

    #[error("eigen residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("quadrature degree {degree} exceeds the budget of {budget}")]
    DegreeOverflow { degree: usize, budget: usize },

    #[error("quadrature certification failed: relative error {error:e} for exponent {exponent:?}")]
    QuadratureCertification { error: f64, exponent: Vec<u32> },

    #[error("schedule out of regime: h = {h} exceeds {limit}; increase r")]
    OutOfRegime { h: f64, limit: f64 },

    #[error("error sequence reached zero at r = {r}: converged exactly")]
    ConvergedExactly { r: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
