use thiserror::Error;

/// Errors produced anywhere in the field, reduction and solver layers.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("division by the zero polynomial")]
    DivisionByZero,

    #[error("irreducibility is undefined for constant polynomials")]
    ConstantPolynomial,

    #[error("no type-II construction via Dickson polynomial for n={0}: f_n(t) is reducible")]
    ReducibleDickson(usize),

    #[error("t is not a normal element for n={0}: basis transition matrix is singular")]
    NotNormalElement(usize),

    #[error("unsupported extension degree n={0}")]
    UnsupportedDegree(usize),

    #[error("length mismatch: expected {expected} coordinates, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("0^0 is undefined")]
    ZeroToZero,

    #[error("constraint not in reduced-sign form (minimum {0} < -1)")]
    NotReducedSign(i64),

    #[error("inconsistent instance: {0}")]
    Inconsistent(String),

    #[error("monomial of degree {0} exceeds the quadratic limit")]
    DegreeTooHigh(usize),

    #[error("non-affine register entry at stage {stage}, bit {bit}")]
    NonAffineRegister { stage: usize, bit: usize },

    #[error("assignment is missing variable {0}")]
    MissingVariable(usize),

    #[error("exhaustive search over {vars} variables exceeds the guard of {guard}; use annealing")]
    TooManyVariables { vars: usize, guard: usize },

    #[error("target is zero or not in the subgroup generated by t")]
    NotInSubgroup,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
