use thiserror::Error;

/// Errors raised by model construction, numerics, and I/O.
///
/// Violations are carried as `f64` so the error type stays independent of
/// the scalar the computation ran in.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square: {len} entries cannot form a {dim}x{dim} matrix")]
    NotSquare { dim: usize, len: usize },

    #[error("{what} is not Hermitian: max |M - M^dagger| = {violation:.3e}")]
    NotHermitian { what: String, violation: f64 },

    #[error("{what} is not unitary: max |U^dagger U - 1| = {violation:.3e}")]
    NotUnitary { what: String, violation: f64 },

    #[error("{what} is not normalized: |norm^2 - 1| = {violation:.3e}")]
    NotNormalized { what: String, violation: f64 },

    #[error("{what} is not a valid density matrix: {reason}")]
    InvalidDensity { what: String, reason: String },

    #[error("operators {{1, L_1, ..., L_n}} are linearly dependent")]
    LinearlyDependent,

    #[error("invalid unitary freedom: {0}")]
    InvalidFreedom(String),

    #[error("invalid GKS form: {0}")]
    InvalidGks(String),

    #[error("invalid projector set: {0}")]
    InvalidProjectors(String),

    #[error("invalid integration config: {0}")]
    InvalidConfig(String),

    #[error("time must be {constraint}, got {t}")]
    InvalidTime { t: f64, constraint: &'static str },

    #[error("integration blew up at step {step}: |psi'| = {norm:.3e} before renormalization")]
    StepBlowUp { step: usize, norm: f64 },

    #[error("scenario error in field `{field}`: {reason}")]
    Scenario { field: String, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn scenario(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Scenario {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
