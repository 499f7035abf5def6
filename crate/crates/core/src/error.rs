use crate::scalar::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix dimension {n} exceeds the supported maximum of {max}")]
    DimensionTooLarge { n: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("index ({i}, {j}) out of range for dimension {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not self-adjoint (relative deviation {deviation:e})")]
    NotSelfAdjoint { deviation: f64 },
    #[error("matrix is singular (|det| = {det_abs:e})")]
    Singular { det_abs: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
    #[error("matrix has a negative eigenvalue {value:e} below the clamp tolerance")]
    NegativeEigenvalue { value: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("|x|^{exponent} is not integrable over an interval containing the origin")]
    NonIntegrable { exponent: Rational },
    #[error("entry ({i}, {j}) with exponent {exponent} is not integrable over the domain")]
    NonIntegrableEntry { i: usize, j: usize, exponent: Rational },
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("invalid cube: {0}")]
    InvalidCube(String),
    #[error("cannot evaluate a power weight with negative exponents at the origin")]
    EvaluationAtOrigin,
    #[error("exponent ({i}, {j}) violates the midpoint condition")]
    MidpointViolated { i: usize, j: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("quadrature did not reach tolerance within {panels} panels")]
    QuadratureBudgetExceeded { panels: usize },
    #[error("operation requires a rotation unitary family")]
    WrongUnitaryFamily,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
