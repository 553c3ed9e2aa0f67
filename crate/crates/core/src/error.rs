//! Error types shared across the crate.
//!
//! Every failure mode carries a stable machine-readable code (see
//! [`Error::code`]) so the CLI can surface library errors verbatim in
//! reports.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of the library surface.
///
/// Numeric payloads are reported as `f64` regardless of the working scalar.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (deviation {deviation:.3e}, tol {tol:.3e})")]
    NotHermitian { deviation: f64, tol: f64 },

    #[error("dimension mismatch: {context}")]
    DimensionMismatch { context: String },

    #[error("matrix entries are not finite after {context}")]
    NonFinite { context: String },

    #[error(
        "matrix is singular or indefinite (min eigenvalue {min_eig:.3e}, max {max_eig:.3e}); \
         reversal is undefined without a strictly positive reference state"
    )]
    SingularOrIndefinite { min_eig: f64, max_eig: f64 },

    #[error("channel does not hold the reference state invariant (|S(pi) - pi| = {deviation:.3e}, tol {tol:.3e})")]
    NotBalanced { deviation: f64, tol: f64 },

    #[error("Kraus operators are not trace preserving (|sum A'A - I| = {violation:.3e}, tol {tol:.3e})")]
    NotTcp { violation: f64, tol: f64 },

    #[error("fixed point is not unique ({peripheral} eigenvalues within gap tolerance of unit modulus)")]
    NonUniqueFixedPoint { peripheral: usize },

    #[error("no positive fixed point found (min eigenvalue {min_eig:.3e})")]
    NoPositiveFixedPoint { min_eig: f64 },

    #[error("branch {index} has probability {p:.3e} below the floor; conditional state undefined")]
    ZeroProbabilityBranch { index: usize, p: f64 },

    #[error("stationary distribution is not unique ({near_unit} eigenvalues within gap tolerance of 1)")]
    NonUniqueStationary { near_unit: usize },

    #[error("stationary distribution has a non-positive entry ({min_entry:.3e})")]
    NonPositiveStationary { min_entry: f64 },

    #[error("state {index} has zero probability; Markov reversal undefined")]
    ZeroProbabilityState { index: usize },

    #[error("matrix is not column-stochastic (deviation {deviation:.3e}, tol {tol:.3e})")]
    NotStochastic { deviation: f64, tol: f64 },

    #[error("probabilities are invalid (deviation {deviation:.3e}, tol {tol:.3e})")]
    InvalidDistribution { deviation: f64, tol: f64 },

    #[error("basis is not orthonormal (|B'B - I| = {deviation:.3e}, tol {tol:.3e})")]
    BasisNotOrthonormal { deviation: f64, tol: f64 },

    #[error("basis does not diagonalize the endpoint Hamiltonian (off-diagonal mass {deviation:.3e})")]
    NotEnergyEigenbasis { deviation: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("trajectory enumeration would produce {count} records (cap {cap})")]
    EnumerationTooLarge { count: u128, cap: u128 },

    #[error("eigensolver failed to converge ({context})")]
    NoConvergence { context: String },

    #[error("invalid input: {context}")]
    InvalidInput { context: String },
}

impl Error {
    /// Stable machine-readable code for reports and exit paths.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "NotSquare",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonFinite { .. } => "NonFinite",
            Error::SingularOrIndefinite { .. } => "SingularOrIndefinite",
            Error::NotBalanced { .. } => "NotBalanced",
            Error::NotTcp { .. } => "NotTcp",
            Error::NonUniqueFixedPoint { .. } => "NonUniqueFixedPoint",
            Error::NoPositiveFixedPoint { .. } => "NoPositiveFixedPoint",
            Error::ZeroProbabilityBranch { .. } => "ZeroProbabilityBranch",
            Error::NonUniqueStationary { .. } => "NonUniqueStationary",
            Error::NonPositiveStationary { .. } => "NonPositiveStationary",
            Error::ZeroProbabilityState { .. } => "ZeroProbabilityState",
            Error::NotStochastic { .. } => "NotStochastic",
            Error::InvalidDistribution { .. } => "InvalidDistribution",
            Error::BasisNotOrthonormal { .. } => "BasisNotOrthonormal",
            Error::NotEnergyEigenbasis { .. } => "NotEnergyEigenbasis",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
            Error::EnumerationTooLarge { .. } => "EnumerationTooLarge",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::InvalidInput { .. } => "InvalidInput",
        }
    }
}
