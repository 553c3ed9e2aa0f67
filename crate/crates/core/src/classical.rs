//! Classical Markov chains and their embedding in quantum operations.
//!
//! Transition matrices are column-stochastic: `m[j][i]` is the probability
//! of moving from state `i` to state `j` and every column sums to one. The
//! reversal of a chain with stationary distribution `p` is
//! `M~ = diag(p) M^T diag(p)^{-1}`, entrywise `M~_ij p_j = M_ji p_i`.
//!
//! In any orthonormal basis the diagonal superoperator elements
//! `M_ac = S_aacc` of a channel form a stochastic matrix; in the eigenbasis
//! of the fixed point, reversing the channel reverses this embedded matrix.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::channel::{KrausChannel, SuperMatrix};
use crate::error::{Error, Result};
use crate::mat::{schur, CMatrix};
use crate::scalar::{cre, Cx, Scalar};
use crate::tol;

/// Probability distribution: non-negative entries summing to one.
#[derive(Debug, Clone)]
pub struct ProbVector<T> {
    p: Vec<T>,
}

impl<T: Scalar> ProbVector<T> {
    /// Validate within `tol`: entries at least `-tol` (clamped to zero) and
    /// total within `tol` of one.
    pub fn new(p: Vec<T>, tol: T) -> Result<Self> {
        let mut worst = T::zero();
        for &x in &p {
            if x < T::zero() {
                worst = worst.max(-x);
            }
            if !x.is_finite() {
                return Err(Error::NonFinite {
                    context: "probability vector".into(),
                });
            }
        }
        let sum: T = p.iter().cloned().sum();
        let sum_dev = (sum - T::one()).abs();
        if worst > tol || sum_dev > tol {
            return Err(Error::InvalidDistribution {
                deviation: worst.max(sum_dev).as_f64(),
                tol: tol.as_f64(),
            });
        }
        let p = p.into_iter().map(|x| x.max(T::zero())).collect();
        Ok(Self { p })
    }

    /// Point mass at `k`.
    pub fn point(dim: usize, k: usize) -> Self {
        let mut p = vec![T::zero(); dim];
        p[k] = T::one();
        Self { p }
    }

    pub fn uniform(dim: usize) -> Self {
        Self {
            p: vec![T::one() / T::real(dim as f64); dim],
        }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.p
    }

    pub fn get(&self, i: usize) -> T {
        self.p[i]
    }
}

impl<T: Scalar + Serialize> Serialize for ProbVector<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.p.serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for ProbVector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let p = Vec::<T>::deserialize(d)?;
        ProbVector::new(p, T::real(tol::PROB_TOL)).map_err(D::Error::custom)
    }
}

/// Column-stochastic transition matrix, row-major storage.
#[derive(Debug, Clone)]
pub struct StochasticMatrix<T> {
    n: usize,
    m: Vec<T>,
}

impl<T: Scalar> StochasticMatrix<T> {
    /// Validate entries (at least `-tol`, clamped) and column sums
    /// (within `tol` of one).
    pub fn from_rows(rows: &[Vec<T>], tol: T) -> Result<Self> {
        let n = rows.len();
        let mut m = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    context: format!("stochastic matrix row of length {} in a {n}-state chain", row.len()),
                });
            }
            for &x in row {
                if !x.is_finite() {
                    return Err(Error::NonFinite {
                        context: "stochastic matrix".into(),
                    });
                }
                if x < -tol {
                    return Err(Error::NotStochastic {
                        deviation: (-x).as_f64(),
                        tol: tol.as_f64(),
                    });
                }
                m.push(x.max(T::zero()));
            }
        }
        let s = Self { n, m };
        for i in 0..n {
            let col: T = (0..n).map(|j| s.entry(j, i)).sum();
            let dev = (col - T::one()).abs();
            if dev > tol {
                return Err(Error::NotStochastic {
                    deviation: dev.as_f64(),
                    tol: tol.as_f64(),
                });
            }
        }
        Ok(s)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `P(i -> j)`.
    #[inline]
    pub fn entry(&self, j: usize, i: usize) -> T {
        self.m[j * self.n + i]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.entry(j, i)).collect())
            .collect()
    }

    /// One step of the chain on a distribution.
    pub fn step(&self, p: &[T]) -> Vec<T> {
        assert_eq!(p.len(), self.n);
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self.entry(j, i) * p[i]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut m = vec![T::zero(); n * n];
        for j in 0..n {
            for i in 0..n {
                m[i * n + j] = self.entry(j, i);
            }
        }
        Self { n, m }
    }

    pub fn to_cmatrix(&self) -> CMatrix<T> {
        CMatrix::from_fn(self.n, self.n, |j, i| cre(self.entry(j, i)))
    }

    pub fn dist(&self, other: &Self) -> T {
        assert_eq!(self.n, other.n);
        self.m
            .iter()
            .zip(&other.m)
            .map(|(&a, &b)| (a - b) * (a - b))
            .sum::<T>()
            .sqrt()
    }
}

impl<T: Scalar + Serialize> Serialize for StochasticMatrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for StochasticMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<T>>::deserialize(d)?;
        StochasticMatrix::from_rows(&rows, T::real(1e-9)).map_err(D::Error::custom)
    }
}

/// Stationary distribution of a column-stochastic matrix.
///
/// Requires the unit eigenvalue to be simple within `gap_tol`
/// (`NonUniqueStationary` otherwise) and every entry of the stationary
/// vector strictly positive (`NonPositiveStationary`), since zero-weight
/// states make the reversal undefined.
pub fn stationary<T: Scalar>(m: &StochasticMatrix<T>) -> Result<ProbVector<T>> {
    stationary_with(m, T::real(tol::GAP_TOL))
}

pub fn stationary_with<T: Scalar>(m: &StochasticMatrix<T>, gap_tol: T) -> Result<ProbVector<T>> {
    let sc = schur(&m.to_cmatrix())?;
    let eigs = sc.eigenvalues();
    let one = Cx::new(T::one(), T::zero());
    let near_unit = eigs.iter().filter(|z| (*z - one).norm() <= gap_tol).count();
    if near_unit != 1 {
        return Err(Error::NonUniqueStationary { near_unit });
    }
    let k = (0..eigs.len())
        .min_by(|&i, &j| {
            (eigs[i] - one)
                .norm()
                .partial_cmp(&(eigs[j] - one).norm())
                .unwrap()
        })
        .expect("non-empty spectrum");
    let v = sc.eigenvector(k);

    // The eigenvector of a real matrix for a real eigenvalue is real up to
    // a phase; rotate the dominant component onto the real axis.
    let lead = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let phase = v[lead].conj() / cre(v[lead].norm());
    let rotated: Vec<Cx<T>> = v.iter().map(|&z| z * phase).collect();
    let imag = rotated
        .iter()
        .map(|z| z.im.abs())
        .fold(T::zero(), |a, b| a.max(b));
    if imag > T::real(1e-9) {
        return Err(Error::NoConvergence {
            context: format!("stationary vector has imaginary mass {:.3e}", imag.as_f64()),
        });
    }
    let mut p: Vec<T> = rotated.iter().map(|z| z.re).collect();
    let total: T = p.iter().cloned().sum();
    if total < T::zero() {
        for x in &mut p {
            *x = -*x;
        }
    }
    let total: T = p.iter().cloned().sum();
    if total.abs() <= T::real(tol::P_FLOOR) {
        return Err(Error::NoConvergence {
            context: "stationary vector has zero total mass".into(),
        });
    }
    for x in &mut p {
        *x = *x / total;
    }

    let min = p.iter().cloned().fold(T::infinity(), |a, b| a.min(b));
    if min <= T::real(1e-12) {
        return Err(Error::NonPositiveStationary {
            min_entry: min.as_f64(),
        });
    }

    let stepped = m.step(&p);
    let resid = stepped
        .iter()
        .zip(&p)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt();
    if resid > T::real(1e-10) {
        return Err(Error::NoConvergence {
            context: format!("stationary residual {:.3e} above 1e-10", resid.as_f64()),
        });
    }
    ProbVector::new(p, T::real(1e-9))
}

/// Markov chain reversal `M~ = diag(p) M^T diag(p)^{-1}`.
///
/// Entrywise `M~_ij p_j = M_ji p_i` holds by construction; the output is
/// validated stochastic at a tolerance scaled by how well `M p = p` holds.
pub fn markov_reverse<T: Scalar>(
    m: &StochasticMatrix<T>,
    p: &ProbVector<T>,
) -> Result<StochasticMatrix<T>> {
    markov_reverse_with(m, p, T::real(tol::BALANCE_TOL))
}

pub fn markov_reverse_with<T: Scalar>(
    m: &StochasticMatrix<T>,
    p: &ProbVector<T>,
    balance_tol: T,
) -> Result<StochasticMatrix<T>> {
    let n = m.dim();
    if p.len() != n {
        return Err(Error::DimensionMismatch {
            context: format!("distribution has {} entries for a {n}-state chain", p.len()),
        });
    }
    let mut min_p = T::infinity();
    for (i, &x) in p.as_slice().iter().enumerate() {
        if x <= T::zero() {
            return Err(Error::ZeroProbabilityState { index: i });
        }
        min_p = min_p.min(x);
    }
    let stepped = m.step(p.as_slice());
    let dev = stepped
        .iter()
        .zip(p.as_slice())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<T>()
        .sqrt();
    if dev > balance_tol {
        return Err(Error::NotBalanced {
            deviation: dev.as_f64(),
            tol: balance_tol.as_f64(),
        });
    }

    let rows: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| m.entry(j, i) * p.get(i) / p.get(j))
                .collect()
        })
        .collect();
    let out_tol = T::real(tol::STOCHASTIC_TOL).max(dev / min_p * T::real(4.0));
    StochasticMatrix::from_rows(&rows, out_tol)
}

/// Stochastic matrix embedded in a superoperator: `M_ac = S_aacc` in the
/// given orthonormal basis (columns of `basis`).
pub fn extract_markov<T: Scalar>(
    sm: &SuperMatrix<T>,
    basis: &CMatrix<T>,
) -> Result<StochasticMatrix<T>> {
    let n = sm.dim();
    if basis.rows() != n || basis.cols() != n {
        return Err(Error::DimensionMismatch {
            context: format!("basis is {}x{}, superoperator dim {n}", basis.rows(), basis.cols()),
        });
    }
    let ortho = basis.dagger().matmul(basis).dist_to_identity();
    if ortho > T::real(tol::BASIS_TOL) {
        return Err(Error::BasisNotOrthonormal {
            deviation: ortho.as_f64(),
            tol: tol::BASIS_TOL,
        });
    }

    let clip = T::real(tol::EXTRACT_CLIP);
    let mut rows = vec![vec![T::zero(); n]; n];
    for c in 0..n {
        let bc = basis.col(c);
        let proj = CMatrix::outer(&bc, &bc);
        let image = sm.apply_op(&proj);
        for a in 0..n {
            let ba = basis.col(a);
            let mut val = Cx::new(T::zero(), T::zero());
            let ib = image.matvec(&ba);
            for r in 0..n {
                val = val + ba[r].conj() * ib[r];
            }
            if val.im.abs() > clip {
                return Err(Error::NotStochastic {
                    deviation: val.im.abs().as_f64(),
                    tol: clip.as_f64(),
                });
            }
            rows[a][c] = val.re;
        }
    }
    StochasticMatrix::from_rows(&rows, clip)
}

/// Channel whose superoperator embeds `M` exactly: Kraus operators
/// `sqrt(M_ji) |e_j><e_i|`. Trace preservation is exact because the column
/// sums are one.
pub fn embed_markov<T: Scalar>(m: &StochasticMatrix<T>) -> KrausChannel<T> {
    let n = m.dim();
    let mut kraus = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let w = m.entry(j, i);
            if w > T::zero() {
                let ej = CMatrix::basis_vector(n, j);
                let ei = CMatrix::basis_vector(n, i);
                kraus.push(CMatrix::outer(&ej, &ei).scale_re(w.sqrt()));
            }
        }
    }
    KrausChannel::new(kraus, None, T::real(1e-12)).expect("embedding is exactly TCP")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::reversal::{reverse_channel, ReverseOpts};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn two_state() -> StochasticMatrix<f64> {
        StochasticMatrix::from_rows(&[vec![0.9, 0.2], vec![0.1, 0.8]], 1e-12).unwrap()
    }

    #[test]
    fn stationary_two_state() {
        let m = two_state();
        let p = stationary(&m).unwrap();
        assert!((p.get(0) - 2.0 / 3.0).abs() < 1e-10);
        assert!((p.get(1) - 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn stationary_identity_is_non_unique() {
        let m = StochasticMatrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1e-12).unwrap();
        assert!(matches!(
            stationary(&m),
            Err(Error::NonUniqueStationary { .. })
        ));
    }

    #[test]
    fn stationary_doubly_stochastic_is_uniform() {
        let m = StochasticMatrix::<f64>::from_rows(
            &[
                vec![0.5, 0.3, 0.2],
                vec![0.3, 0.4, 0.3],
                vec![0.2, 0.3, 0.5],
            ],
            1e-12,
        )
        .unwrap();
        let p = stationary(&m).unwrap();
        for i in 0..3 {
            assert!((p.get(i) - 1.0 / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_absorbing_chain_is_non_positive() {
        let m = StochasticMatrix::<f64>::from_rows(&[vec![1.0, 0.5], vec![0.0, 0.5]], 1e-12).unwrap();
        assert!(matches!(
            stationary(&m),
            Err(Error::NonPositiveStationary { .. })
        ));
    }

    #[test]
    fn markov_reverse_detailed_balanced_two_state() {
        // Hand oracle: M~_ij = M_ji p_i / p_j with p = (2/3, 1/3).
        // M~_00 = 0.9, M~_01 = M_10 p1/p0 ... wait: M~_01 = M_10 p0/p1?
        // Entrywise: M~_01 = M_10 * p_0 / p_1 = 0.1 * (2/3)/(1/3) = 0.2.
        // The chain is detailed balanced, so M~ = M.
        let m = two_state();
        let p = stationary(&m).unwrap();
        let rev = markov_reverse(&m, &p).unwrap();
        assert!(rev.dist(&m) < 1e-10);
        // entrywise identity at machine precision
        for i in 0..2 {
            for j in 0..2 {
                let lhs = rev.entry(i, j) * p.get(j);
                let rhs = m.entry(j, i) * p.get(i);
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn markov_reverse_three_cycle_is_transpose() {
        // deterministic cycle 0 -> 1 -> 2 -> 0 with uniform stationary law
        let m = StochasticMatrix::<f64>::from_rows(
            &[
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
            ],
            1e-12,
        )
        .unwrap();
        let p = ProbVector::uniform(3);
        let rev = markov_reverse(&m, &p).unwrap();
        assert!(rev.dist(&m.transpose()) < 1e-12);
        // double reversal returns M
        let back = markov_reverse(&rev, &p).unwrap();
        assert!(back.dist(&m) < 1e-12);
    }

    #[test]
    fn markov_reverse_symmetric_doubly_stochastic_is_itself() {
        let m = StochasticMatrix::<f64>::from_rows(
            &[vec![0.6, 0.4], vec![0.4, 0.6]],
            1e-12,
        )
        .unwrap();
        let p = ProbVector::uniform(2);
        let rev = markov_reverse(&m, &p).unwrap();
        assert!(rev.dist(&m) < 1e-12);
    }

    #[test]
    fn markov_reverse_guards() {
        let m = two_state();
        let zerop = ProbVector::new(vec![1.0, 0.0], 1e-12).unwrap();
        assert!(matches!(
            markov_reverse(&m, &zerop),
            Err(Error::ZeroProbabilityState { .. })
        ));
        let wrong = ProbVector::new(vec![0.5, 0.5], 1e-12).unwrap();
        assert!(matches!(
            markov_reverse(&m, &wrong),
            Err(Error::NotBalanced { .. })
        ));
    }

    #[test]
    fn markov_reverse_random_involution_and_stationarity() {
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        for _ in 0..10 {
            let m = fixtures::random_stochastic::<f64>(&mut rng, 4);
            let p = stationary(&m).unwrap();
            let rev = markov_reverse(&m, &p).unwrap();
            // reversed chain has the same stationary distribution
            let p2 = stationary(&rev).unwrap();
            for i in 0..4 {
                assert!((p.get(i) - p2.get(i)).abs() < 1e-8);
            }
            let back = markov_reverse(&rev, &p).unwrap();
            assert!(back.dist(&m) < 1e-9);
        }
    }

    #[test]
    fn extract_identity_channel() {
        let ch = KrausChannel::<f64>::identity(3);
        let m = extract_markov(&ch.super_matrix(), &CMatrix::identity(3)).unwrap();
        for j in 0..3 {
            for i in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((m.entry(j, i) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn extract_unitary_channel_gives_transition_amplitudes() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let h = fixtures::random_hermitian::<f64>(&mut rng, 3);
        let u = crate::mat::unitary_of(&h, 0.9).unwrap();
        let ch = KrausChannel::unitary(u.clone()).unwrap();
        let m = extract_markov(&ch.super_matrix(), &CMatrix::identity(3)).unwrap();
        for a in 0..3 {
            for c in 0..3 {
                let expect = u[(a, c)].norm_sqr();
                assert!((m.entry(a, c) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn extract_dephasing_then_unitary_matches_enumeration() {
        // brute-force S_aacc from the Kraus sum directly
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let h = fixtures::random_hermitian::<f64>(&mut rng, 2);
        let u = crate::mat::unitary_of(&h, 0.5).unwrap();
        let p0 = CMatrix::diag_re(&[1.0, 0.0]);
        let p1 = CMatrix::diag_re(&[0.0, 1.0]);
        let kraus = vec![u.matmul(&p0), u.matmul(&p1)];
        let ch = KrausChannel::new(kraus.clone(), None, 1e-9).unwrap();
        let m = extract_markov(&ch.super_matrix(), &CMatrix::identity(2)).unwrap();
        for a in 0..2 {
            for c in 0..2 {
                let ec = CMatrix::basis_vector(2, c);
                let proj = CMatrix::outer(&ec, &ec);
                let mut out = CMatrix::zeros(2, 2);
                for k in &kraus {
                    out = &out + &k.matmul(&proj).matmul(&k.dagger());
                }
                let expect = out[(a, a)].re;
                assert!((m.entry(a, c) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn embed_identity_is_projective_dephasing() {
        let m = StochasticMatrix::<f64>::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1e-12).unwrap();
        let ch = embed_markov(&m);
        assert_eq!(ch.len(), 2);
        assert!(ch.check_tcp(1e-15).is_tcp);
    }

    #[test]
    fn embed_then_extract_is_identity() {
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let m = fixtures::random_stochastic::<f64>(&mut rng, 4);
        let ch = embed_markov(&m);
        assert!(ch.check_tcp(1e-12).is_tcp);
        let back = extract_markov(&ch.super_matrix(), &CMatrix::identity(4)).unwrap();
        assert!(back.dist(&m) < 1e-12);
    }

    #[test]
    fn embedded_chain_fixed_point_is_stationary_diagonal() {
        let m = two_state();
        let ch = embed_markov(&m);
        let pi = ch.fixed_point().unwrap();
        let p = stationary(&m).unwrap();
        let expect = CMatrix::diag_re(&[p.get(0), p.get(1)]);
        assert!(pi.mat().dist_fro(&expect) < 1e-9);
    }

    #[test]
    fn equivariance_of_quantum_and_classical_reversal() {
        // extract(reverse(S)) = markov_reverse(extract(S)) in the eigenbasis
        // of the fixed point.
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        for d in 2..=4 {
            let (ch, pi) = fixtures::random_channel_full_rank::<f64>(&mut rng, d, d, 1e-3);
            let eig = crate::mat::herm_eig(pi.mat()).unwrap();
            let basis = eig.eigenvectors.clone();

            let m = extract_markov(&ch.super_matrix(), &basis).unwrap();
            let diag = ProbVector::new(eig.eigenvalues.clone(), 1e-8).unwrap();

            let rev_ch = reverse_channel(&ch, &pi, &ReverseOpts::default()).unwrap();
            let lhs = extract_markov(&rev_ch.super_matrix(), &basis).unwrap();
            let rhs = markov_reverse_with(&m, &diag, 1e-6).unwrap();
            assert!(lhs.dist(&rhs) < 1e-9, "d={d}: {}", lhs.dist(&rhs));
        }
    }
}
