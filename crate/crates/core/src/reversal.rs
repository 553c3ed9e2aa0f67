//! Time reversal of quantum operations: the pi-dual.
//!
//! For a channel `S` holding the strictly positive state `pi` invariant,
//! the reversed channel is `S~ = D_pi S^x D_pi^{-1}` where
//! `D_pi X = pi^{1/2} X pi^{1/2}` and `S^x` is the Hilbert-Schmidt adjoint.
//! On Kraus operators this is `A~_a = pi^{1/2} A_a' pi^{-1/2}`; heat labels
//! change sign because the reversed interaction swaps the bath transition.
//!
//! The reversal is an involution on channels balanced with respect to
//! `pi`, preserves `pi`, preserves trace, reverses composition order, and
//! keeps complete positivity; `detailed balanced` means `S~ = S`.

use serde::{Deserialize, Serialize};

use crate::channel::{DensityMatrix, KrausChannel, SuperMatrix};
use crate::error::{Error, Result};
use crate::mat::{pd_power, CMatrix};
use crate::scalar::Scalar;
use crate::tol;

/// Direction selector for [`PiDual::d_pi`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DPiDirection {
    /// `pi^{1/2} X pi^{1/2}`
    Forward,
    /// `pi^{-1/2} X pi^{-1/2}`
    Inverse,
}

/// Cached square roots of a strictly positive-definite reference state.
#[derive(Debug, Clone)]
pub struct PiDual<T: Scalar> {
    pi: DensityMatrix<T>,
    sqrt_pi: CMatrix<T>,
    inv_sqrt_pi: CMatrix<T>,
}

impl<T: Scalar> PiDual<T> {
    /// Fails with `SingularOrIndefinite` unless `pi` is strictly positive
    /// definite (eigenvalues above `RANK_TOL` relative to the largest).
    pub fn new(pi: &DensityMatrix<T>) -> Result<Self> {
        let sqrt_pi = pd_power(pi.mat(), T::real(0.5))?;
        let inv_sqrt_pi = pd_power(pi.mat(), T::real(-0.5))?;
        Ok(Self {
            pi: pi.clone(),
            sqrt_pi,
            inv_sqrt_pi,
        })
    }

    pub fn pi(&self) -> &DensityMatrix<T> {
        &self.pi
    }

    pub fn sqrt_pi(&self) -> &CMatrix<T> {
        &self.sqrt_pi
    }

    pub fn inv_sqrt_pi(&self) -> &CMatrix<T> {
        &self.inv_sqrt_pi
    }

    /// `D_pi X` or its inverse.
    pub fn d_pi(&self, x: &CMatrix<T>, dir: DPiDirection) -> CMatrix<T> {
        let s = match dir {
            DPiDirection::Forward => &self.sqrt_pi,
            DPiDirection::Inverse => &self.inv_sqrt_pi,
        };
        s.matmul(x).matmul(s)
    }

    /// Superoperator matrix of `D_pi` on column-stacked operators.
    pub fn d_pi_super(&self, dir: DPiDirection) -> CMatrix<T> {
        let s = match dir {
            DPiDirection::Forward => &self.sqrt_pi,
            DPiDirection::Inverse => &self.inv_sqrt_pi,
        };
        s.transpose().kron(s)
    }

    /// Reversed Kraus operator `pi^{1/2} A' pi^{-1/2}`.
    pub fn reverse_kraus(&self, a: &CMatrix<T>) -> CMatrix<T> {
        self.sqrt_pi.matmul(&a.dagger()).matmul(&self.inv_sqrt_pi)
    }

    /// `D_pi M' D_pi^{-1}` on a raw superoperator matrix.
    pub fn reverse_super_mat(&self, m: &CMatrix<T>) -> CMatrix<T> {
        self.d_pi_super(DPiDirection::Forward)
            .matmul(&m.dagger())
            .matmul(&self.d_pi_super(DPiDirection::Inverse))
    }
}

/// Options for [`reverse_channel`].
#[derive(Debug, Clone, Copy)]
pub struct ReverseOpts<T> {
    /// Largest admitted `|S(pi) - pi|` before reversing.
    pub balance_tol: T,
    /// Trace-preservation tolerance demanded of the reversed channel.
    pub tcp_tol: T,
}

impl<T: Scalar> Default for ReverseOpts<T> {
    fn default() -> Self {
        Self {
            balance_tol: T::real(tol::BALANCE_TOL),
            tcp_tol: T::real(tol::REVERSED_TCP_TOL),
        }
    }
}

/// Deviation `|S(pi) - pi|` of a channel from holding `pi` invariant.
pub fn balance_deviation<T: Scalar>(ch: &KrausChannel<T>, pi: &DensityMatrix<T>) -> Result<T> {
    Ok(ch.apply_op(pi.mat())?.dist_fro(pi.mat()))
}

/// The pi-dual of a channel: Kraus operators `pi^{1/2} A_a' pi^{-1/2}`,
/// heat labels negated.
///
/// The caller supplies `pi` (from [`KrausChannel::fixed_point`] or known
/// analytically); the operation never computes it silently, keeping the
/// non-unique-fixed-point failure mode explicit. Fails with `NotBalanced`
/// when `|S(pi) - pi|` exceeds `opts.balance_tol` and propagates
/// `SingularOrIndefinite` from the square roots.
pub fn reverse_channel<T: Scalar>(
    ch: &KrausChannel<T>,
    pi: &DensityMatrix<T>,
    opts: &ReverseOpts<T>,
) -> Result<KrausChannel<T>> {
    if pi.dim() != ch.dim() {
        return Err(Error::DimensionMismatch {
            context: format!("pi is {}-dimensional, channel {}", pi.dim(), ch.dim()),
        });
    }
    let dual = PiDual::new(pi)?;
    let dev = balance_deviation(ch, pi)?;
    if dev > opts.balance_tol {
        return Err(Error::NotBalanced {
            deviation: dev.as_f64(),
            tol: opts.balance_tol.as_f64(),
        });
    }
    let kraus: Vec<CMatrix<T>> = ch.kraus().iter().map(|a| dual.reverse_kraus(a)).collect();
    let heat = ch.heat().map(|h| h.iter().map(|&q| -q).collect());
    KrausChannel::new(kraus, heat, opts.tcp_tol)
}

/// Time reversal of a continuous-time generator: `L~ = D_pi L^x D_pi^{-1}`
/// as a superoperator matrix. No balance gate; whether `exp(L t)` is TCP is
/// the caller's diagnostic.
pub fn reverse_generator<T: Scalar>(
    l: &SuperMatrix<T>,
    pi: &DensityMatrix<T>,
) -> Result<SuperMatrix<T>> {
    if pi.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            context: format!("pi is {}-dimensional, generator {}", pi.dim(), l.dim()),
        });
    }
    let dual = PiDual::new(pi)?;
    SuperMatrix::new(l.dim(), dual.reverse_super_mat(l.mat()))
}

/// Reversal at the superoperator level (no TCP or balance gates); used by
/// the detailed-balance predicate, which must handle unbalanced input.
pub fn reverse_super<T: Scalar>(
    sm: &SuperMatrix<T>,
    pi: &DensityMatrix<T>,
) -> Result<SuperMatrix<T>> {
    let dual = PiDual::new(pi)?;
    SuperMatrix::new(sm.dim(), dual.reverse_super_mat(sm.mat()))
}

/// Verdict of [`is_detailed_balanced`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetailedBalanceReport {
    /// `|S(pi) - pi| <= tol`
    pub balanced: bool,
    /// `|S~ - S| <= tol` on superoperator matrices
    pub detailed_balanced: bool,
    /// superoperator distance `|S~ - S|`
    pub deviation: f64,
    /// `|S(pi) - pi|`
    pub balance_deviation: f64,
}

/// Balanced / detailed-balanced predicate with respect to `pi`.
///
/// Detailed balance implies balance, so a detailed-balanced verdict forces
/// the balanced flag regardless of rounding in the balance residual.
pub fn is_detailed_balanced<T: Scalar>(
    ch: &KrausChannel<T>,
    pi: &DensityMatrix<T>,
    tol: T,
) -> Result<DetailedBalanceReport> {
    let sm = ch.super_matrix();
    let rev = reverse_super(&sm, pi)?;
    let deviation = sm.dist(&rev);
    let bal_dev = balance_deviation(ch, pi)?;
    let detailed = deviation <= tol;
    let balanced = bal_dev <= tol || detailed;
    Ok(DetailedBalanceReport {
        balanced,
        detailed_balanced: detailed,
        deviation: deviation.as_f64(),
        balance_deviation: bal_dev.as_f64(),
    })
}
