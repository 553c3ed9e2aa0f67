//! Default tolerances, quoted for `f64`.
//!
//! Every public operation that checks a tolerance also accepts an explicit
//! override; these are the documented defaults. Relative tolerances are
//! taken against the Frobenius norm of the checked object unless stated.

/// Hermiticity check, relative to the input norm.
pub const HERM_TOL: f64 = 1e-10;

/// Positive-definiteness rank floor: eigenvalues below
/// `RANK_TOL * lambda_max` make a reference state non-invertible and the
/// reversal is refused rather than regularized.
pub const RANK_TOL: f64 = 1e-12;

/// Trace-preservation check on Kraus sets, `|sum A'A - I|`.
pub const TCP_TOL: f64 = 1e-9;

/// Trace-preservation tolerance admitted for reversed channels.
pub const REVERSED_TCP_TOL: f64 = 1e-8;

/// Invariance check `|S(pi) - pi|` required before reversing.
pub const BALANCE_TOL: f64 = 1e-8;

/// Spectral-gap tolerance deciding unit-eigenvalue multiplicity.
pub const GAP_TOL: f64 = 1e-8;

/// Probability floor below which a branch is reported unreachable.
pub const P_FLOOR: f64 = 1e-15;

/// Probability-vector validation (non-negativity slack and sum deviation).
pub const PROB_TOL: f64 = 1e-12;

/// Column-sum deviation accepted by the stochastic-matrix constructor.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Negative clip window for stochastic matrices extracted from channels:
/// entries in `[-EXTRACT_CLIP, 0)` are rounding debris and clip to zero.
pub const EXTRACT_CLIP: f64 = 1e-9;

/// Orthonormality of measurement bases, `|B'B - I|`.
pub const BASIS_TOL: f64 = 1e-10;

/// Default cap on exhaustively enumerated trajectory records.
pub const ENUM_CAP: u128 = 10_000_000;

/// Balance tolerance scaling for finite-coupling thermostated steps:
/// a protocol built at coupling `eps` is reversed with
/// `max(BALANCE_TOL, BALANCE_EPS_SCALE * eps)`.
pub const BALANCE_EPS_SCALE: f64 = 10.0;
