//! Quantum operations in Kraus form.
//!
//! A channel is an ordered list of Kraus operators `{A_a}` acting as
//! `S(rho) = sum_a A_a rho A_a'`, optionally labeled with per-operator heat.
//! The superoperator matrix acts on column-stacked operators, so the matrix
//! of the channel is `sum_a conj(A_a) (x) A_a`. Channel equality always
//! means superoperator equality: Kraus lists are not unique.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::{herm_eig, schur, CMatrix};
use crate::scalar::{Cx, Scalar};
use crate::tol;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DensityMatrix<T: Scalar> {
    mat: CMatrix<T>,
}

impl<T: Scalar> DensityMatrix<T> {
    /// Validate Hermiticity (1e-10 relative), positivity (eigenvalues at
    /// least -1e-10) and unit trace (1e-10).
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        let n = mat.require_square()?;
        mat.require_hermitian(T::real(tol::HERM_TOL))?;
        let tr = mat.trace();
        let one_dev = (tr - Cx::new(T::one(), T::zero())).norm();
        if one_dev > T::real(tol::HERM_TOL) * T::real(n as f64).max(T::one()) {
            return Err(Error::InvalidInput {
                context: format!("density matrix trace deviates from 1 by {:.3e}", one_dev.as_f64()),
            });
        }
        let eig = herm_eig(&mat)?;
        let min = eig.eigenvalues[0];
        if min < -T::real(tol::HERM_TOL) {
            return Err(Error::InvalidInput {
                context: format!("density matrix has eigenvalue {:.3e}", min.as_f64()),
            });
        }
        Ok(Self { mat })
    }

    /// Hermitize and renormalize the trace, then validate. Used where the
    /// result is known to be a state up to rounding.
    pub fn from_approx(mat: &CMatrix<T>) -> Result<Self> {
        let h = mat.hermitize();
        let tr = h.trace().re;
        if tr.abs() <= T::real(tol::P_FLOOR) {
            return Err(Error::InvalidInput {
                context: "state normalization: trace is numerically zero".into(),
            });
        }
        Self::new(h.scale_re(T::one() / tr))
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: CMatrix::identity(dim).scale_re(T::one() / T::real(dim as f64)),
        }
    }

    /// Pure state `|k><k|` in the computational basis.
    pub fn pure_basis(dim: usize, k: usize) -> Self {
        let v = CMatrix::basis_vector(dim, k);
        Self {
            mat: CMatrix::outer(&v, &v),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    pub fn mat(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix<T> {
        self.mat
    }

    /// Eigenvalues in ascending order.
    pub fn spectrum(&self) -> Result<Vec<T>> {
        Ok(herm_eig(&self.mat)?.eigenvalues)
    }
}

/// Outcome of a trace-preservation check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TcpReport {
    pub max_violation: f64,
    pub is_tcp: bool,
}

/// Quantum operation in operator-sum form, optionally heat-labeled.
///
/// `heat[a]` is the energy flowing from the bath into the system when the
/// `a`-th interaction is observed.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "KrausRepr<T>", into = "KrausRepr<T>")]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct KrausChannel<T: Scalar> {
    dim: usize,
    kraus: Vec<CMatrix<T>>,
    heat: Option<Vec<T>>,
}

#[derive(Serialize, Deserialize)]
struct KrausRepr<T: Scalar> {
    dim: usize,
    kraus: Vec<CMatrix<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    heat: Option<Vec<T>>,
}

impl<T: Scalar + Serialize> From<KrausChannel<T>> for KrausRepr<T> {
    fn from(ch: KrausChannel<T>) -> Self {
        KrausRepr {
            dim: ch.dim,
            kraus: ch.kraus,
            heat: ch.heat,
        }
    }
}

impl<T: Scalar + serde::de::DeserializeOwned> TryFrom<KrausRepr<T>> for KrausChannel<T> {
    type Error = Error;

    fn try_from(r: KrausRepr<T>) -> Result<Self> {
        let ch = KrausChannel::new_unchecked(r.kraus, r.heat)?;
        if ch.dim != r.dim {
            return Err(Error::DimensionMismatch {
                context: format!("channel declares dim {} but operators are {}", r.dim, ch.dim),
            });
        }
        Ok(ch)
    }
}

impl<T: Scalar> KrausChannel<T> {
    /// Build a channel and require trace preservation within `tcp_tol`.
    pub fn new(kraus: Vec<CMatrix<T>>, heat: Option<Vec<T>>, tcp_tol: T) -> Result<Self> {
        let ch = Self::new_unchecked(kraus, heat)?;
        let rep = ch.check_tcp(tcp_tol);
        if !rep.is_tcp {
            return Err(Error::NotTcp {
                violation: rep.max_violation,
                tol: tcp_tol.as_f64(),
            });
        }
        Ok(ch)
    }

    /// Build without the trace-preservation check (adjoints and other
    /// not-necessarily-TCP maps).
    pub fn new_unchecked(kraus: Vec<CMatrix<T>>, heat: Option<Vec<T>>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(Error::InvalidInput {
                context: "channel needs at least one Kraus operator".into(),
            });
        }
        let dim = kraus[0].require_square()?;
        for (i, a) in kraus.iter().enumerate() {
            if a.rows() != dim || a.cols() != dim {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "Kraus operator {i} is {}x{}, expected {dim}x{dim}",
                        a.rows(),
                        a.cols()
                    ),
                });
            }
            a.check_finite("Kraus operator")?;
        }
        if let Some(h) = &heat {
            if h.len() != kraus.len() {
                return Err(Error::DimensionMismatch {
                    context: format!(
                        "{} heat labels for {} Kraus operators",
                        h.len(),
                        kraus.len()
                    ),
                });
            }
        }
        Ok(Self { dim, kraus, heat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[CMatrix<T>] {
        &self.kraus
    }

    pub fn heat(&self) -> Option<&[T]> {
        self.heat.as_deref()
    }

    pub fn len(&self) -> usize {
        self.kraus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kraus.is_empty()
    }

    /// Identity channel `{I}`.
    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            kraus: vec![CMatrix::identity(dim)],
            heat: None,
        }
    }

    /// Single-unitary channel `{U}`.
    pub fn unitary(u: CMatrix<T>) -> Result<Self> {
        Self::new(vec![u], None, T::real(tol::TCP_TOL))
    }

    /// `rho' = sum_a A_a rho A_a'`.
    pub fn apply(&self, rho: &DensityMatrix<T>) -> Result<DensityMatrix<T>> {
        let out = self.apply_op(rho.mat())?;
        DensityMatrix::new(out.hermitize())
    }

    /// The Kraus sum on an arbitrary operator (no state validation).
    pub fn apply_op(&self, x: &CMatrix<T>) -> Result<CMatrix<T>> {
        if x.rows() != self.dim || x.cols() != self.dim {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "operator is {}x{}, channel dimension {}",
                    x.rows(),
                    x.cols(),
                    self.dim
                ),
            });
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for a in &self.kraus {
            out = &out + &a.matmul(x).matmul(&a.dagger());
        }
        out.check_finite("apply")?;
        Ok(out)
    }

    /// Superoperator adjoint: the dual under the Hilbert-Schmidt inner
    /// product `tr A'B`, obtained by adjointing every Kraus operator.
    /// Not trace preserving in general (it is unital instead).
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            kraus: self.kraus.iter().map(|a| a.dagger()).collect(),
            heat: self.heat.as_ref().map(|h| h.iter().map(|&q| -q).collect()),
        }
    }

    /// `max_violation = |sum_a A_a' A_a - I|` and the verdict at `tol`.
    pub fn check_tcp(&self, tcp_tol: T) -> TcpReport {
        let mut acc = CMatrix::zeros(self.dim, self.dim);
        for a in &self.kraus {
            acc = &acc + &a.dagger().matmul(a);
        }
        let violation = acc.dist_to_identity();
        TcpReport {
            max_violation: violation.as_f64(),
            is_tcp: violation <= tcp_tol,
        }
    }

    /// Matrix of the channel on column-stacked operators.
    pub fn super_matrix(&self) -> SuperMatrix<T> {
        let d = self.dim;
        let mut mat = CMatrix::zeros(d * d, d * d);
        for a in &self.kraus {
            mat = &mat + &a.conj().kron(a);
        }
        SuperMatrix { dim: d, mat }
    }

    /// Composition `self . other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                context: format!("composing dims {} and {}", self.dim, other.dim),
            });
        }
        let mut kraus = Vec::with_capacity(self.len() * other.len());
        for b in &self.kraus {
            for a in &other.kraus {
                kraus.push(b.matmul(a));
            }
        }
        Self::new_unchecked(kraus, None)
    }

    /// Probability of observing interaction `alpha` on `rho` and the
    /// conditional post-interaction state.
    pub fn observe(
        &self,
        rho: &DensityMatrix<T>,
        alpha: usize,
    ) -> Result<(T, DensityMatrix<T>)> {
        if alpha >= self.kraus.len() {
            return Err(Error::IndexOutOfRange {
                index: alpha,
                len: self.kraus.len(),
            });
        }
        let a = &self.kraus[alpha];
        let ara = a.matmul(rho.mat()).matmul(&a.dagger());
        let p = ara.trace().re;
        if p <= T::real(tol::P_FLOOR) {
            return Err(Error::ZeroProbabilityBranch {
                index: alpha,
                p: p.as_f64(),
            });
        }
        let cond = DensityMatrix::new(ara.hermitize().scale_re(T::one() / p))?;
        Ok((p, cond))
    }

    /// Interaction probabilities for every Kraus index.
    pub fn branch_probabilities(&self, rho: &DensityMatrix<T>) -> Result<Vec<T>> {
        self.kraus
            .iter()
            .map(|a| Ok(a.matmul(rho.mat()).matmul(&a.dagger()).trace().re))
            .collect()
    }

    /// Unique full-rank fixed point `pi` with `S(pi) = pi`.
    ///
    /// Runs a full eigendecomposition of the superoperator matrix and
    /// refuses (`NonUniqueFixedPoint`) when more than one eigenvalue sits
    /// within `gap_tol` of unit modulus, as for unitary channels where
    /// every density matrix diagonal in the energy eigenbasis is fixed.
    pub fn fixed_point(&self) -> Result<DensityMatrix<T>> {
        self.super_matrix().fixed_point()
    }
}

/// A superoperator as a `d^2 x d^2` matrix on column-stacked operators.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuperMatrix<T: Scalar> {
    dim: usize,
    mat: CMatrix<T>,
}

impl<T: Scalar> SuperMatrix<T> {
    pub fn new(dim: usize, mat: CMatrix<T>) -> Result<Self> {
        if mat.rows() != dim * dim || mat.cols() != dim * dim {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "superoperator for dim {dim} must be {0}x{0}, got {1}x{2}",
                    dim * dim,
                    mat.rows(),
                    mat.cols()
                ),
            });
        }
        Ok(Self { dim, mat })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mat(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_mat(self) -> CMatrix<T> {
        self.mat
    }

    /// Apply to an operator by vectorizing, multiplying and reshaping.
    pub fn apply_op(&self, x: &CMatrix<T>) -> CMatrix<T> {
        let v = self.mat.matvec(&x.vec_cols());
        CMatrix::from_vec_cols(self.dim, &v)
    }

    /// Matrix element `S_abcd = <e_a| S(|e_d><e_c|) |e_b>`.
    ///
    /// Index order follows the tensor convention; see [`Self::elem_caves`]
    /// and [`Self::elem_terhal_divincenzo`] for the other orderings in use.
    pub fn elem(&self, a: usize, b: usize, c: usize, d: usize) -> Cx<T> {
        let n = self.dim;
        self.mat[(b * n + a, c * n + d)]
    }

    /// Caves ordering `S_{ad,bc}`: row pair `(a, d)`, column pair `(b, c)`.
    pub fn elem_caves(&self, ad: (usize, usize), bc: (usize, usize)) -> Cx<T> {
        self.elem(ad.0, bc.0, bc.1, ad.1)
    }

    /// Terhal/DiVincenzo ordering `S_{ab,dc}`.
    pub fn elem_terhal_divincenzo(&self, ab: (usize, usize), dc: (usize, usize)) -> Cx<T> {
        self.elem(ab.0, ab.1, dc.1, dc.0)
    }

    /// Frobenius distance between superoperators; the channel-equality
    /// metric used throughout.
    pub fn dist(&self, other: &Self) -> T {
        self.mat.dist_fro(&other.mat)
    }

    /// Hilbert-Schmidt adjoint (conjugate transpose in the vec basis).
    pub fn hs_adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            mat: self.mat.dagger(),
        }
    }

    /// Composition `self . other`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            mat: self.mat.matmul(&other.mat),
        }
    }

    /// Choi reordering: `J[(a d + i), (b d + j)] = M[(b d + a), (j d + i)]`.
    /// `J` is positive semidefinite exactly when the map is completely
    /// positive.
    pub fn choi(&self) -> CMatrix<T> {
        let d = self.dim;
        CMatrix::from_fn(d * d, d * d, |r, c| {
            let (a, i) = (r / d, r % d);
            let (b, j) = (c / d, c % d);
            self.mat[(b * d + a, j * d + i)]
        })
    }

    /// Least eigenvalue of the Hermitized Choi matrix; complete positivity
    /// holds when this is not more negative than the tolerance.
    pub fn choi_min_eigenvalue(&self) -> Result<T> {
        let j = self.choi().hermitize();
        let eig = herm_eig(&j)?;
        Ok(eig.eigenvalues[0])
    }

    /// Unique fixed point; see [`KrausChannel::fixed_point`].
    pub fn fixed_point(&self) -> Result<DensityMatrix<T>> {
        self.fixed_point_with(T::real(tol::GAP_TOL))
    }

    /// Fixed point with an explicit spectral-gap tolerance.
    pub fn fixed_point_with(&self, gap_tol: T) -> Result<DensityMatrix<T>> {
        let sc = schur(&self.mat)?;
        let eigs = sc.eigenvalues();
        let peripheral = eigs
            .iter()
            .filter(|z| (z.norm() - T::one()).abs() <= gap_tol)
            .count();
        if peripheral > 1 {
            return Err(Error::NonUniqueFixedPoint { peripheral });
        }
        if peripheral == 0 {
            return Err(Error::NoPositiveFixedPoint { min_eig: f64::NAN });
        }
        let one = Cx::new(T::one(), T::zero());
        let k = (0..eigs.len())
            .min_by(|&i, &j| {
                (eigs[i] - one)
                    .norm()
                    .partial_cmp(&(eigs[j] - one).norm())
                    .unwrap()
            })
            .expect("non-empty spectrum");
        let v = sc.eigenvector(k);
        let op = CMatrix::from_vec_cols(self.dim, &v);

        // The eigenvector carries an arbitrary phase; rotate it so the trace
        // is real positive before Hermitizing.
        let tr = op.trace();
        if tr.norm() <= T::real(tol::P_FLOOR) {
            return Err(Error::NoPositiveFixedPoint {
                min_eig: f64::NAN,
            });
        }
        let phase = tr.conj() / Cx::new(tr.norm(), T::zero());
        let pi = op.scale(phase).hermitize();
        let pi = pi.scale_re(T::one() / pi.trace().re);

        let eig = herm_eig(&pi)?;
        let min = eig.eigenvalues[0];
        if min < -T::real(tol::HERM_TOL) {
            return Err(Error::NoPositiveFixedPoint {
                min_eig: min.as_f64(),
            });
        }
        // Clamp rounding-level negatives so downstream PD checks see a state.
        let pi = if min < T::zero() {
            eig.apply_fn(|l| Cx::new(l.max(T::zero()), T::zero()))
        } else {
            pi
        };
        let pi = pi.scale_re(T::one() / pi.trace().re);
        let state = DensityMatrix::new(pi.hermitize())?;

        let residual = self.apply_op(state.mat()).dist_fro(state.mat());
        if residual > T::real(1e-9) * state.mat().norm_fro().max(T::one()) {
            return Err(Error::NoConvergence {
                context: format!(
                    "fixed point residual {:.3e} above 1e-9",
                    residual.as_f64()
                ),
            });
        }
        Ok(state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    type M = CMatrix<f64>;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    fn depolarizing_qubit() -> KrausChannel<f64> {
        // Kraus set {I/2, X/2, Y/2, Z/2} sends every qubit state to I/2.
        let x = M::new(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let y = M::new(2, 2, vec![c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).unwrap();
        let z = M::diag(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let i = M::identity(2);
        let ops = [i, x, y, z].map(|m| m.scale_re(0.5)).to_vec();
        KrausChannel::new(ops, None, 1e-9).unwrap()
    }

    #[test]
    fn identity_channel_preserves_states() {
        let ch = KrausChannel::<f64>::identity(3);
        let rho = DensityMatrix::maximally_mixed(3);
        let out = ch.apply(&rho).unwrap();
        assert!(out.mat().dist_fro(rho.mat()) < 1e-15);
    }

    #[test]
    fn depolarizing_sends_everything_to_maximally_mixed() {
        let ch = depolarizing_qubit();
        let rho = DensityMatrix::pure_basis(2, 0);
        let out = ch.apply(&rho).unwrap();
        assert!(out.mat().dist_fro(DensityMatrix::maximally_mixed(2).mat()) < 1e-12);
    }

    #[test]
    fn random_channel_preserves_trace() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let ch = fixtures::random_channel::<f64>(&mut rng, 3, 4);
        let rho = fixtures::random_density(&mut rng, 3);
        let out = ch.apply(&rho).unwrap();
        assert!((out.mat().trace().re - 1.0).abs() < 1e-12);
        // complete positivity witnessed on the output spectrum
        let spec = out.spectrum().unwrap();
        assert!(spec[0] >= -1e-9);
    }

    #[test]
    fn check_tcp_scaled_identity() {
        let half = KrausChannel::new_unchecked(vec![M::identity(2).scale_re(0.5)], None).unwrap();
        let rep = half.check_tcp(1e-9);
        assert!(!rep.is_tcp);
        // sum A'A = I/4, deviation norm = |3/4| * sqrt(2) in Frobenius;
        // the scalar per-entry violation is 3/4.
        assert!((rep.max_violation - 0.75 * 2.0f64.sqrt()).abs() < 1e-12);

        let id = KrausChannel::<f64>::identity(2);
        assert_eq!(id.check_tcp(1e-9).max_violation, 0.0);
    }

    #[test]
    fn adjoint_satisfies_hs_inner_product_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let ch = fixtures::random_channel::<f64>(&mut rng, 3, 3);
        let adj = ch.adjoint();
        for _ in 0..5 {
            let a = fixtures::random_matrix(&mut rng, 3);
            let b = fixtures::random_matrix(&mut rng, 3);
            // <S A, B> = <A, S^x B>
            let lhs = ch.apply_op(&a).unwrap().dagger().matmul(&b).trace();
            let rhs = a.dagger().matmul(&adj.apply_op(&b).unwrap()).trace();
            assert!((lhs - rhs).norm() < 1e-10);
        }
    }

    #[test]
    fn adjoint_is_involution_on_super_matrices() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let ch = fixtures::random_channel::<f64>(&mut rng, 2, 3);
        let twice = ch.adjoint().adjoint();
        assert!(ch.super_matrix().dist(&twice.super_matrix()) < 1e-12);
    }

    #[test]
    fn adjoint_of_unitary_channel_is_inverse() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let h = fixtures::random_hermitian(&mut rng, 3);
        let u = crate::mat::unitary_of(&h, 0.9).unwrap();
        let ch = KrausChannel::unitary(u.clone()).unwrap();
        let expect = KrausChannel::unitary(u.dagger()).unwrap();
        assert!(ch.adjoint().super_matrix().dist(&expect.super_matrix()) < 1e-12);
    }

    #[test]
    fn super_matrix_identity_elements() {
        let ch = KrausChannel::<f64>::identity(3);
        let sm = ch.super_matrix();
        for a in 0..3 {
            for b in 0..3 {
                for cc in 0..3 {
                    for d in 0..3 {
                        let expect = if a == d && b == cc { 1.0 } else { 0.0 };
                        assert!((sm.elem(a, b, cc, d).re - expect).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn super_matrix_unitary_elements() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let h = fixtures::random_hermitian(&mut rng, 3);
        let u = crate::mat::unitary_of(&h, 0.6).unwrap();
        let ch = KrausChannel::unitary(u.clone()).unwrap();
        let sm = ch.super_matrix();
        for a in 0..3 {
            for b in 0..3 {
                for cc in 0..3 {
                    for d in 0..3 {
                        let expect = u[(a, d)] * u[(b, cc)].conj();
                        assert!((sm.elem(a, b, cc, d) - expect).norm() < 1e-12);
                        // Caves and Terhal/DiVincenzo orderings address the
                        // same value.
                        assert_eq!(sm.elem(a, b, cc, d), sm.elem_caves((a, d), (b, cc)));
                        assert_eq!(
                            sm.elem(a, b, cc, d),
                            sm.elem_terhal_divincenzo((a, b), (d, cc))
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn tcp_constraint_on_elements() {
        // sum_a S_aacd = delta_cd for trace-preserving maps
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let ch = fixtures::random_channel::<f64>(&mut rng, 3, 4);
        let sm = ch.super_matrix();
        for cc in 0..3 {
            for d in 0..3 {
                let mut s = c(0.0, 0.0);
                for a in 0..3 {
                    s = s + sm.elem(a, a, cc, d);
                }
                let expect = if cc == d { 1.0 } else { 0.0 };
                assert!((s - c(expect, 0.0)).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn super_matrix_agrees_with_kraus_sum() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        for d in 2..=4 {
            let ch = fixtures::random_channel::<f64>(&mut rng, d, 3);
            let sm = ch.super_matrix();
            let rho = fixtures::random_density(&mut rng, d);
            let via_kraus = ch.apply_op(rho.mat()).unwrap();
            let via_super = sm.apply_op(rho.mat());
            assert!(via_kraus.dist_fro(&via_super) < 1e-10);
        }
    }

    #[test]
    fn choi_of_tcp_channel_is_psd_with_trace_d() {
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let ch = fixtures::random_channel::<f64>(&mut rng, 3, 2);
        let sm = ch.super_matrix();
        let j = sm.choi();
        assert!(j.herm_deviation() < 1e-10);
        assert!(sm.choi_min_eigenvalue().unwrap() >= -1e-9);
        assert!((j.trace().re - 3.0).abs() < 1e-9);
    }

    #[test]
    fn observe_identity_and_projective() {
        let id = KrausChannel::<f64>::identity(2);
        let rho = fixtures::diag_density(&[0.3, 0.7]);
        let (p, cond) = id.observe(&rho, 0).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        assert!(cond.mat().dist_fro(rho.mat()) < 1e-12);

        let p0 = M::diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let p1 = M::diag(&[c(0.0, 0.0), c(1.0, 0.0)]);
        let proj = KrausChannel::new(vec![p0, p1], None, 1e-9).unwrap();
        let (p, cond) = proj.observe(&rho, 1).unwrap();
        assert!((p - 0.7).abs() < 1e-12);
        assert!(cond.mat().dist_fro(DensityMatrix::pure_basis(2, 1).mat()) < 1e-12);

        // zero-probability branch is refused
        let ground = DensityMatrix::pure_basis(2, 0);
        assert!(matches!(
            proj.observe(&ground, 1),
            Err(Error::ZeroProbabilityBranch { .. })
        ));
    }

    #[test]
    fn observe_probabilities_sum_to_one() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let ch = fixtures::random_channel::<f64>(&mut rng, 3, 4);
        let rho = fixtures::random_density(&mut rng, 3);
        let ps = ch.branch_probabilities(&rho).unwrap();
        let total: f64 = ps.iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fixed_point_depolarizing_is_maximally_mixed() {
        let ch = depolarizing_qubit();
        let pi = ch.fixed_point().unwrap();
        assert!(pi.mat().dist_fro(DensityMatrix::maximally_mixed(2).mat()) < 1e-10);
    }

    #[test]
    fn fixed_point_unitary_channel_is_non_unique() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let h = fixtures::random_hermitian(&mut rng, 3);
        let u = crate::mat::unitary_of(&h, 1.1).unwrap();
        let ch = KrausChannel::unitary(u).unwrap();
        assert!(matches!(
            ch.fixed_point(),
            Err(Error::NonUniqueFixedPoint { .. })
        ));
    }

    #[test]
    fn fixed_point_of_random_channel_is_fixed() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        for d in 2..=4 {
            let ch = fixtures::random_channel::<f64>(&mut rng, d, d);
            let pi = ch.fixed_point().unwrap();
            let out = ch.apply(&pi).unwrap();
            assert!(out.mat().dist_fro(pi.mat()) < 1e-9);
        }
    }

    #[test]
    fn serde_channel_round_trip() {
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        let ch = fixtures::random_channel::<f64>(&mut rng, 2, 3);
        let s = serde_json::to_string(&ch).unwrap();
        let back: KrausChannel<f64> = serde_json::from_str(&s).unwrap();
        assert_eq!(back.dim(), 2);
        assert!(ch.super_matrix().dist(&back.super_matrix()) == 0.0);
    }
}
