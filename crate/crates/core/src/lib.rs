//! Time reversal of quantum operations.
//!
//! A quantum operation (a trace-preserving, completely positive map given by
//! Kraus operators) that holds a density matrix `pi` invariant admits a
//! reversal, the pi-dual, in exact analogy with the reversal of a classical
//! Markov chain with respect to its stationary distribution. This crate
//! builds that reversal and everything needed to verify its algebra at desk
//! scale (dimensions up to ~8 on the system, ~64 on a joint system--bath
//! space):
//!
//! - [`mat`]: dense complex matrices with Hermitian eigendecomposition,
//!   positive-definite powers, unitary exponentials, tensor products and
//!   partial traces;
//! - [`channel`]: Kraus channels, superoperator matrices, fixed points,
//!   complete-positivity certificates and single-interaction statistics;
//! - [`reversal`]: the pi-dual of channels and generators, and the
//!   balanced / detailed-balanced predicates;
//! - [`classical`]: stochastic matrices, stationary distributions, Markov
//!   chain reversal, and the embedding of a Markov matrix inside a channel;
//! - [`thermal`]: system--bath dilations at inverse temperature beta with
//!   heat-labeled Kraus operators, and the weak-coupling reversed-operator
//!   residual;
//! - [`driven`]: time-ordered protocols of heat-labeled channels, trajectory
//!   enumeration and seeded sampling, the microscopic-reversibility check
//!   `p/p~ = exp(-beta Q)`, and the Jarzynski identity verifier;
//! - [`acceptance`]: the self-test suite run by `qrev selftest` and by the
//!   `acceptance` integration test target.
//!
//! Core numerics are generic over the real scalar via [`Scalar`] (`f32` or
//! `f64`); concrete `f64` aliases such as [`CMatrix64`] are exported at the
//! crate root. All tolerances quoted in the documentation are for `f64`.
//!
//! Units: `hbar = 1`, `k_B = 1`. Energies and inverse temperatures are
//! reciprocal; heat carries energy units.

pub mod acceptance;
pub mod channel;
pub mod classical;
pub mod driven;
pub mod error;
pub mod fixtures;
pub mod mat;
pub mod reversal;
pub mod scalar;
pub mod thermal;
pub mod tol;

pub use channel::{DensityMatrix, KrausChannel, SuperMatrix, TcpReport};
pub use classical::{ProbVector, StochasticMatrix};
pub use driven::{Protocol, Trajectory};
pub use error::{Error, Result};
pub use mat::{CMatrix, HermEig};
pub use reversal::PiDual;
pub use scalar::Scalar;
pub use thermal::{BathSpec, CouplingSpec, HeatLabeledChannel};

/// Complex scalar over `f64`.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix over `f64`.
pub type CMatrix64 = CMatrix<f64>;
/// Density matrix over `f64`.
pub type DensityMatrix64 = DensityMatrix<f64>;
/// Kraus channel over `f64`.
pub type KrausChannel64 = KrausChannel<f64>;
/// Superoperator matrix over `f64`.
pub type SuperMatrix64 = SuperMatrix<f64>;
/// Probability vector over `f64`.
pub type ProbVector64 = ProbVector<f64>;
/// Column-stochastic matrix over `f64`.
pub type StochasticMatrix64 = StochasticMatrix<f64>;
/// Driven protocol over `f64`.
pub type Protocol64 = Protocol<f64>;
