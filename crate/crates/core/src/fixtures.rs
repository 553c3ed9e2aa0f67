//! Seeded random fixtures used by the test suites and the self-test
//! command. Everything here is deterministic given the RNG state.

use rand::Rng;
use rand_chacha::ChaCha12Rng;

use crate::channel::{DensityMatrix, KrausChannel};
use crate::mat::{herm_eig, pd_power, CMatrix};
use crate::reversal::{self, ReverseOpts};
use crate::scalar::{Cx, Scalar};

/// Uniform complex entries in the unit square.
pub fn random_matrix<T: Scalar>(rng: &mut ChaCha12Rng, n: usize) -> CMatrix<T> {
    CMatrix::from_fn(n, n, |_, _| {
        Cx::new(
            T::real(rng.gen_range(-1.0..1.0)),
            T::real(rng.gen_range(-1.0..1.0)),
        )
    })
}

pub fn random_hermitian<T: Scalar>(rng: &mut ChaCha12Rng, n: usize) -> CMatrix<T> {
    random_matrix(rng, n).hermitize()
}

/// Haar-ish unitary: exponential of a random Hermitian generator.
pub fn random_unitary<T: Scalar>(rng: &mut ChaCha12Rng, n: usize) -> CMatrix<T> {
    let h = random_hermitian(rng, n);
    crate::mat::unitary_of(&h, T::one()).expect("random Hermitian generator")
}

/// Random full-rank density matrix `G G' / tr` plus a floor on the spectrum.
pub fn random_density<T: Scalar>(rng: &mut ChaCha12Rng, n: usize) -> DensityMatrix<T> {
    let g = random_matrix::<T>(rng, n);
    let p = &g.matmul(&g.dagger()) + &CMatrix::identity(n).scale_re(T::real(0.05));
    DensityMatrix::from_approx(&p).expect("positive construction")
}

/// Diagonal density matrix from classical weights (must sum to 1).
pub fn diag_density<T: Scalar>(weights: &[f64]) -> DensityMatrix<T> {
    let entries: Vec<T> = weights.iter().map(|&w| T::real(w)).collect();
    DensityMatrix::new(CMatrix::diag_re(&entries)).expect("valid weights")
}

/// Random TCP channel with `k` Kraus operators: Gaussian-ish seeds
/// normalized through the inverse square root of `sum G'G`.
pub fn random_channel<T: Scalar>(rng: &mut ChaCha12Rng, dim: usize, k: usize) -> KrausChannel<T> {
    let seeds: Vec<CMatrix<T>> = (0..k).map(|_| random_matrix(rng, dim)).collect();
    let mut total = CMatrix::zeros(dim, dim);
    for g in &seeds {
        total = &total + &g.dagger().matmul(g);
    }
    let inv_sqrt = pd_power(&total, T::real(-0.5)).expect("sum G'G is PD");
    let kraus: Vec<CMatrix<T>> = seeds.iter().map(|g| g.matmul(&inv_sqrt)).collect();
    KrausChannel::new(kraus, None, T::real(1e-9)).expect("normalized Kraus set")
}

/// Random TCP channel whose unique full-rank fixed point has a spectral
/// spacing of at least `min_gap` (retries until found).
pub fn random_channel_full_rank<T: Scalar>(
    rng: &mut ChaCha12Rng,
    dim: usize,
    k: usize,
    min_gap: f64,
) -> (KrausChannel<T>, DensityMatrix<T>) {
    loop {
        let ch = random_channel(rng, dim, k);
        let Ok(pi) = ch.fixed_point() else { continue };
        let Ok(spec) = pi.spectrum() else { continue };
        if spec[0] <= T::real(1e-4) {
            continue;
        }
        let gap_ok = spec.windows(2).all(|w| w[1] - w[0] >= T::real(min_gap));
        if gap_ok {
            return (ch, pi);
        }
    }
}

/// Channel with a prescribed fixed point: a mixture of unitaries commuting
/// with `pi` and a reset-to-`pi` component, so `S(pi) = pi` holds exactly
/// and the fixed point is unique (the reset gives a spectral gap).
pub fn channel_fixing<T: Scalar>(
    rng: &mut ChaCha12Rng,
    pi: &DensityMatrix<T>,
) -> KrausChannel<T> {
    let d = pi.dim();
    let eig = herm_eig(pi.mat()).expect("pi Hermitian");
    let v = &eig.eigenvectors;

    let weights = [0.3, 0.3];
    let reset_weight = 1.0 - weights.iter().sum::<f64>();
    let mut kraus = Vec::new();
    for &w in &weights {
        let phases: Vec<Cx<T>> = (0..d)
            .map(|_| {
                let th: f64 = rng.gen_range(-3.0..3.0);
                Cx::new(T::real(th.cos()), T::real(-th.sin()))
            })
            .collect();
        let u = &(v * &CMatrix::diag(&phases)) * &v.dagger();
        kraus.push(u.scale_re(T::real(w.sqrt())));
    }
    let rq = T::real(reset_weight.sqrt());
    for i in 0..d {
        for j in 0..d {
            let li = eig.eigenvalues[i].max(T::zero()).sqrt();
            let col_i = v.col(i);
            let col_j = v.col(j);
            kraus.push(CMatrix::outer(&col_i, &col_j).scale_re(rq * li));
        }
    }
    KrausChannel::new(kraus, None, T::real(1e-9)).expect("mixture is TCP")
}

/// Detailed-balanced channel with fixed point `pi`: the symmetrization
/// `(C + C~)/2` of a channel fixing `pi`.
pub fn symmetrized_channel<T: Scalar>(
    rng: &mut ChaCha12Rng,
    pi: &DensityMatrix<T>,
) -> KrausChannel<T> {
    let c = channel_fixing(rng, pi);
    let rev = reversal::reverse_channel(&c, pi, &ReverseOpts::default()).expect("balanced");
    let half = T::real(0.5f64.sqrt());
    let mut kraus: Vec<CMatrix<T>> = c.kraus().iter().map(|a| a.scale_re(half)).collect();
    kraus.extend(rev.kraus().iter().map(|a| a.scale_re(half)));
    KrausChannel::new(kraus, None, T::real(1e-9)).expect("mixture is TCP")
}

/// Random full-rank density matrix with nondegenerate spectrum.
pub fn random_density_gapped<T: Scalar>(
    rng: &mut ChaCha12Rng,
    n: usize,
    min_gap: f64,
) -> DensityMatrix<T> {
    loop {
        let rho = random_density::<T>(rng, n);
        let spec = rho.spectrum().expect("Hermitian");
        if spec[0] > T::real(1e-3)
            && spec.windows(2).all(|w| w[1] - w[0] >= T::real(min_gap))
        {
            return rho;
        }
    }
}

/// Random column-stochastic matrix with strictly positive entries.
pub fn random_stochastic<T: Scalar>(rng: &mut ChaCha12Rng, n: usize) -> crate::StochasticMatrix<T> {
    let mut rows = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        for j in 0..n {
            rows[j][i] = T::real(raw[j] / s);
        }
    }
    crate::StochasticMatrix::from_rows(&rows, T::real(1e-12)).expect("columns normalized")
}
