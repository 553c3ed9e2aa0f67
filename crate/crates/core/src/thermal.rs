//! Thermostated channels from system--bath dilations.
//!
//! The joint Hamiltonian is `H_SB = H_S (x) I_B + I_S (x) H_B + eps H_int`
//! with the system factor first. Evolving for time `t` under
//! `U_SB = exp(-i H_SB t)` with the bath prepared thermally and then
//! measuring the bath in its energy eigenbasis yields one Kraus operator
//! per ordered pair `(i, j)` of bath eigenstates,
//!
//! ```text
//! A_ij = exp(-beta E_i / 2) / sqrt(Z_B) <b_j| U_SB |b_i>
//! ```
//!
//! carrying heat `Q_ij = E_i - E_j` (energy flowing from bath to system).
//! The set is exactly trace preserving for every coupling strength because
//! `U_SB` is unitary. In the small-coupling limit the pi-dual of this
//! channel coincides with the channel built from the time-reversed joint
//! unitary with the bath indices swapped; `weak_coupling_residual` measures
//! the distance between the two, which shrinks linearly in `eps`.

use serde::{Deserialize, Serialize};

use crate::channel::{DensityMatrix, KrausChannel};
use crate::error::{Error, Result};
use crate::mat::{herm_eig, unitary_of, CMatrix, Keep};
use crate::reversal::PiDual;
use crate::scalar::{cre, Scalar};
use crate::tol;

/// Bath Hamiltonian and inverse temperature.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct BathSpec<T: Scalar> {
    pub h_bath: CMatrix<T>,
    pub beta: T,
}

impl<T: Scalar> BathSpec<T> {
    pub fn new(h_bath: CMatrix<T>, beta: T) -> Result<Self> {
        h_bath.require_hermitian(T::real(tol::HERM_TOL))?;
        if !(beta.is_finite() && beta > T::zero()) {
            return Err(Error::InvalidInput {
                context: format!("beta must be finite and positive, got {}", beta.as_f64()),
            });
        }
        Ok(Self { h_bath, beta })
    }

    pub fn dim(&self) -> usize {
        self.h_bath.rows()
    }
}

/// Interaction Hamiltonian on the joint space and coupling constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct CouplingSpec<T: Scalar> {
    pub h_int: CMatrix<T>,
    pub epsilon: T,
}

impl<T: Scalar> CouplingSpec<T> {
    pub fn new(h_int: CMatrix<T>, epsilon: T) -> Result<Self> {
        h_int.require_hermitian(T::real(tol::HERM_TOL))?;
        if !(epsilon.is_finite() && epsilon >= T::zero()) {
            return Err(Error::InvalidInput {
                context: format!("epsilon must be finite and non-negative, got {}", epsilon.as_f64()),
            });
        }
        Ok(Self { h_int, epsilon })
    }
}

/// Kraus channel with bath-transition bookkeeping: operator `alpha` came
/// from the bath transition `index_map[alpha] = (i, j)` and carries heat
/// `E_i - E_j`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct HeatLabeledChannel<T: Scalar> {
    pub channel: KrausChannel<T>,
    pub index_map: Vec<(usize, usize)>,
    pub bath_energies: Vec<T>,
    pub beta: T,
}

impl<T: Scalar> HeatLabeledChannel<T> {
    pub fn dim(&self) -> usize {
        self.channel.dim()
    }

    pub fn heat(&self, alpha: usize) -> T {
        self.channel.heat().expect("heat labels present")[alpha]
    }
}

/// Gibbs state `exp(-beta H) / Z` plus `log Z`.
///
/// The spectrum is shifted by its minimum before exponentiating so large
/// `beta` cannot overflow; `log Z` is reported for the unshifted energies.
pub fn thermal_state<T: Scalar>(h: &CMatrix<T>, beta: T) -> Result<(DensityMatrix<T>, T)> {
    if !(beta.is_finite() && beta > T::zero()) {
        return Err(Error::InvalidInput {
            context: format!("beta must be finite and positive, got {}", beta.as_f64()),
        });
    }
    let eig = herm_eig(h)?;
    let e_min = eig.eigenvalues[0];
    let weights: Vec<T> = eig
        .eigenvalues
        .iter()
        .map(|&e| (-beta * (e - e_min)).exp())
        .collect();
    let z_shifted: T = weights.iter().cloned().sum();
    let log_z = z_shifted.ln() - beta * e_min;
    let mut k = 0;
    let state = eig.apply_fn(|_| {
        let w = weights[k] / z_shifted;
        k += 1;
        cre(w)
    });
    let dm = DensityMatrix::new(state.hermitize())?;
    Ok((dm, log_z))
}

/// `H_SB = H_S (x) I_B + I_S (x) H_B + eps H_int`.
pub fn joint_hamiltonian<T: Scalar>(
    h_sys: &CMatrix<T>,
    bath: &BathSpec<T>,
    cpl: &CouplingSpec<T>,
) -> Result<CMatrix<T>> {
    let d_s = h_sys.require_square()?;
    let d_b = bath.h_bath.require_square()?;
    let joint = d_s * d_b;
    if cpl.h_int.rows() != joint || cpl.h_int.cols() != joint {
        return Err(Error::DimensionMismatch {
            context: format!(
                "interaction is {}x{}, joint space is {joint}",
                cpl.h_int.rows(),
                cpl.h_int.cols()
            ),
        });
    }
    h_sys.require_hermitian(T::real(tol::HERM_TOL))?;
    let sum = &(&h_sys.kron(&CMatrix::identity(d_b))
        + &CMatrix::identity(d_s).kron(&bath.h_bath))
        + &cpl.h_int.scale_re(cpl.epsilon);
    Ok(sum)
}

/// Bath energy eigensystem sorted ascending with the deterministic phase
/// convention of [`herm_eig`] (first significant component real positive).
fn bath_eigensystem<T: Scalar>(bath: &BathSpec<T>) -> Result<(Vec<T>, CMatrix<T>)> {
    let eig = herm_eig(&bath.h_bath)?;
    Ok((eig.eigenvalues, eig.eigenvectors))
}

/// Thermostated channel for one time interval.
///
/// Produces `d_B^2` heat-labeled Kraus operators indexed by bath pairs
/// `(i, j)` in ascending-energy order, `alpha = i * d_B + j`.
pub fn thermostated_channel<T: Scalar>(
    h_sys: &CMatrix<T>,
    bath: &BathSpec<T>,
    cpl: &CouplingSpec<T>,
    t: T,
) -> Result<HeatLabeledChannel<T>> {
    if !(t.is_finite() && t > T::zero()) {
        return Err(Error::InvalidInput {
            context: format!("evolution time must be positive, got {}", t.as_f64()),
        });
    }
    let d_s = h_sys.require_square()?;
    let d_b = bath.dim();
    let h_sb = joint_hamiltonian(h_sys, bath, cpl)?;
    let u = unitary_of(&h_sb, t)?;
    let (energies, vecs) = bath_eigensystem(bath)?;

    // Boltzmann amplitudes with the spectrum shifted for safe exponentials:
    // exp(-beta E_i / 2) / sqrt(Z) is shift invariant.
    let e_min = energies[0];
    let shifted: Vec<T> = energies
        .iter()
        .map(|&e| (-bath.beta * (e - e_min)).exp())
        .collect();
    let z_shifted: T = shifted.iter().cloned().sum();
    let amp: Vec<T> = shifted.iter().map(|&w| (w / z_shifted).sqrt()).collect();

    // <b_j| U |b_i> as a system operator: contract the bath indices with
    // eigenvector columns. Joint index is s * d_b + b.
    let mut kraus = Vec::with_capacity(d_b * d_b);
    let mut heat = Vec::with_capacity(d_b * d_b);
    let mut index_map = Vec::with_capacity(d_b * d_b);
    for i in 0..d_b {
        let bi = vecs.col(i);
        for j in 0..d_b {
            let bj = vecs.col(j);
            let mut block = CMatrix::zeros(d_s, d_s);
            for s_out in 0..d_s {
                for s_in in 0..d_s {
                    let mut acc = crate::scalar::czero::<T>();
                    for b_out in 0..d_b {
                        for b_in in 0..d_b {
                            acc = acc
                                + bj[b_out].conj()
                                    * u[(s_out * d_b + b_out, s_in * d_b + b_in)]
                                    * bi[b_in];
                        }
                    }
                    block[(s_out, s_in)] = acc;
                }
            }
            kraus.push(block.scale_re(amp[i]));
            heat.push(energies[i] - energies[j]);
            index_map.push((i, j));
        }
    }

    let channel = KrausChannel::new(kraus, Some(heat), T::real(1e-12))?;
    Ok(HeatLabeledChannel {
        channel,
        index_map,
        bath_energies: energies,
        beta: bath.beta,
    })
}

/// Dilation route for the same dynamics: `tr_B U (rho (x) pi_B) U'`.
/// Used as the independent oracle for the Kraus construction.
pub fn dilation_apply<T: Scalar>(
    h_sys: &CMatrix<T>,
    bath: &BathSpec<T>,
    cpl: &CouplingSpec<T>,
    t: T,
    rho: &DensityMatrix<T>,
) -> Result<CMatrix<T>> {
    let d_s = h_sys.require_square()?;
    let d_b = bath.dim();
    let h_sb = joint_hamiltonian(h_sys, bath, cpl)?;
    let u = unitary_of(&h_sb, t)?;
    let (pi_b, _) = thermal_state(&bath.h_bath, bath.beta)?;
    let joint = rho.mat().kron(pi_b.mat());
    let evolved = u.matmul(&joint).matmul(&u.dagger());
    evolved.partial_trace(d_s, d_b, Keep::System)
}

/// Largest deviation, over Kraus indices, between the pi-dual operator
/// `pi^{1/2} A_a' pi^{-1/2}` and the bath-index-swapped operator of the
/// time-reversed joint unitary, which equals `A_a' exp(+beta Q_a / 2)`.
///
/// Exact (up to rounding) at `eps = 0`; first order in `eps` otherwise.
pub fn weak_coupling_residual<T: Scalar>(
    hlc: &HeatLabeledChannel<T>,
    pi_sys: &DensityMatrix<T>,
) -> Result<T> {
    let dual = PiDual::new(pi_sys)?;
    let heat = hlc.channel.heat().ok_or_else(|| Error::InvalidInput {
        context: "weak-coupling residual needs heat labels".into(),
    })?;
    let half_beta = hlc.beta * T::real(0.5);
    let mut worst = T::zero();
    for (a, q) in hlc.channel.kraus().iter().zip(heat) {
        let reversed = dual.reverse_kraus(a);
        let target = a.dagger().scale_re((half_beta * *q).exp());
        worst = worst.max(reversed.dist_fro(&target));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::Cx;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    type M = CMatrix<f64>;

    fn qubit_fixture() -> (M, BathSpec<f64>, CouplingSpec<f64>) {
        let h_sys = M::diag_re(&[0.0, 1.0]);
        let h_bath = M::diag_re(&[0.0, 0.8]);
        let bath = BathSpec::new(h_bath, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let h_int = fixtures::random_hermitian::<f64>(&mut rng, 4);
        let cpl = CouplingSpec::new(h_int, 1e-2).unwrap();
        (h_sys, bath, cpl)
    }

    #[test]
    fn thermal_state_of_zero_hamiltonian_is_maximally_mixed() {
        let (pi, log_z) = thermal_state(&M::zeros(3, 3), 2.0).unwrap();
        assert!(pi.mat().dist_fro(DensityMatrix::maximally_mixed(3).mat()) < 1e-14);
        assert!((log_z - 3.0f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn thermal_state_two_level_closed_form() {
        let delta = 0.7;
        let beta = 1.3;
        let h = M::diag_re(&[0.0, delta]);
        let (pi, log_z) = thermal_state(&h, beta).unwrap();
        let w = (-beta * delta).exp();
        let z = 1.0 + w;
        assert!((pi.mat()[(0, 0)].re - 1.0 / z).abs() < 1e-14);
        assert!((pi.mat()[(1, 1)].re - w / z).abs() < 1e-14);
        assert!((log_z - z.ln()).abs() < 1e-14);
    }

    #[test]
    fn thermal_state_low_temperature_projects_to_ground() {
        // beta * gap = 40
        let h = M::diag_re(&[0.0, 1.0, 1.7]);
        let (pi, _) = thermal_state(&h, 40.0).unwrap();
        let ground = DensityMatrix::pure_basis(3, 0);
        assert!(pi.mat().dist_fro(ground.mat()) < 1e-15);
    }

    #[test]
    fn joint_hamiltonian_limits() {
        let (h_sys, bath, _) = qubit_fixture();
        let zero_cpl = CouplingSpec::new(M::zeros(4, 4), 0.0).unwrap();
        let h = joint_hamiltonian(&h_sys, &bath, &zero_cpl).unwrap();
        // decoupled: exp(-i H t) factorizes
        let t = 0.9;
        let u = unitary_of(&h, t).unwrap();
        let us = unitary_of(&h_sys, t).unwrap();
        let ub = unitary_of(&bath.h_bath, t).unwrap();
        assert!(u.dist_fro(&us.kron(&ub)) < 1e-12);

        // pure interaction
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let h_int = fixtures::random_hermitian::<f64>(&mut rng, 4);
        let cpl = CouplingSpec::new(h_int.clone(), 0.3).unwrap();
        let h = joint_hamiltonian(&M::zeros(2, 2), &BathSpec::new(M::zeros(2, 2), 1.0).unwrap(), &cpl)
            .unwrap();
        assert!(h.dist_fro(&h_int.scale_re(0.3)) < 1e-14);
        assert!(h.herm_deviation() < 1e-12);
    }

    #[test]
    fn thermostated_channel_is_exactly_tcp() {
        let (h_sys, bath, cpl) = qubit_fixture();
        for eps in [0.0, 1e-2, 1e-1] {
            let c = CouplingSpec::new(cpl.h_int.clone(), eps).unwrap();
            let hlc = thermostated_channel(&h_sys, &bath, &c, 1.0).unwrap();
            let rep = hlc.channel.check_tcp(1e-12);
            assert!(rep.is_tcp, "eps={eps}: violation {}", rep.max_violation);
            assert_eq!(hlc.channel.len(), 4);
        }
    }

    #[test]
    fn decoupled_limit_equals_system_unitary() {
        let (h_sys, bath, cpl) = qubit_fixture();
        let c = CouplingSpec::new(cpl.h_int.clone(), 0.0).unwrap();
        let t = 1.0;
        let hlc = thermostated_channel(&h_sys, &bath, &c, t).unwrap();
        let u = unitary_of(&h_sys, t).unwrap();
        let expect = KrausChannel::unitary(u).unwrap();
        assert!(hlc.channel.super_matrix().dist(&expect.super_matrix()) < 1e-12);
    }

    #[test]
    fn heat_labels_of_two_level_bath() {
        let (h_sys, _, cpl) = qubit_fixture();
        let omega = 0.8;
        let bath = BathSpec::new(M::diag_re(&[0.0, omega]), 1.0).unwrap();
        let hlc = thermostated_channel(&h_sys, &bath, &cpl, 1.0).unwrap();
        let heat = hlc.channel.heat().unwrap();
        // alpha = i * d_b + j with Q = E_i - E_j
        assert!((heat[0] - 0.0).abs() < 1e-14);
        assert!((heat[1] + omega).abs() < 1e-14);
        assert!((heat[2] - omega).abs() < 1e-14);
        assert!((heat[3] - 0.0).abs() < 1e-14);
        assert_eq!(hlc.index_map, vec![(0, 0), (0, 1), (1, 0), (1, 1)]);
    }

    #[test]
    fn kraus_sum_matches_dilation_partial_trace() {
        let (h_sys, bath, cpl) = qubit_fixture();
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        let t = 0.8;
        let hlc = thermostated_channel(&h_sys, &bath, &cpl, t).unwrap();
        for _ in 0..5 {
            let rho = fixtures::random_density::<f64>(&mut rng, 2);
            let via_kraus = hlc.channel.apply_op(rho.mat()).unwrap();
            let via_dilation = dilation_apply(&h_sys, &bath, &cpl, t, &rho).unwrap();
            assert!(
                via_kraus.dist_fro(&via_dilation) < 1e-10,
                "gap {}",
                via_kraus.dist_fro(&via_dilation)
            );
        }
    }

    #[test]
    fn weak_coupling_residual_vanishes_when_decoupled() {
        let (h_sys, bath, cpl) = qubit_fixture();
        let c = CouplingSpec::new(cpl.h_int.clone(), 0.0).unwrap();
        let hlc = thermostated_channel(&h_sys, &bath, &c, 1.0).unwrap();
        let (pi_sys, _) = thermal_state(&h_sys, bath.beta).unwrap();
        let r = weak_coupling_residual(&hlc, &pi_sys).unwrap();
        assert!(r < 1e-10, "residual {r}");
    }

    #[test]
    fn weak_coupling_residual_scales_linearly() {
        let (h_sys, bath, cpl) = qubit_fixture();
        let (pi_sys, _) = thermal_state(&h_sys, bath.beta).unwrap();
        let r = |eps: f64| {
            let c = CouplingSpec::new(cpl.h_int.clone(), eps).unwrap();
            let hlc = thermostated_channel(&h_sys, &bath, &c, 1.0).unwrap();
            weak_coupling_residual(&hlc, &pi_sys).unwrap()
        };
        let r1 = r(1e-2);
        let r2 = r(5e-3);
        let ratio = r1 / r2;
        assert!(
            (1.6..=2.4).contains(&ratio),
            "ratio {ratio} (r1={r1}, r2={r2})"
        );
    }

    #[test]
    fn infinite_temperature_bath_keeps_residual_finite() {
        // beta -> 0 is outside BathSpec; emulate with a degenerate bath so
        // pi_B = I / d_B and only the system-side mismatch contributes.
        let (h_sys, _, cpl) = qubit_fixture();
        let bath = BathSpec::new(M::zeros(2, 2), 1.0).unwrap();
        let hlc = thermostated_channel(&h_sys, &bath, &cpl, 1.0).unwrap();
        let (pi_sys, _) = thermal_state(&h_sys, 1.0).unwrap();
        let r = weak_coupling_residual(&hlc, &pi_sys).unwrap();
        assert!(r.is_finite());
        assert!(r < 1.0);
    }

    #[test]
    fn fixed_point_error_scales_linearly() {
        let (h_sys, bath, cpl) = qubit_fixture();
        let (pi_sys, _) = thermal_state(&h_sys, bath.beta).unwrap();
        let dev = |eps: f64| {
            let c = CouplingSpec::new(cpl.h_int.clone(), eps).unwrap();
            let hlc = thermostated_channel(&h_sys, &bath, &c, 1.0).unwrap();
            hlc.channel.apply_op(pi_sys.mat()).unwrap().dist_fro(pi_sys.mat())
        };
        let d1 = dev(1e-2);
        let d2 = dev(5e-3);
        let ratio = d1 / d2;
        assert!((1.6..=2.4).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn bath_basis_is_deterministic_under_scrambling() {
        // diagonal bath vs the same bath conjugated back: energies agree
        let (_, bath, _) = qubit_fixture();
        let (e1, _) = bath_eigensystem(&bath).unwrap();
        let rot = crate::mat::unitary_of(&fixtures::random_hermitian::<f64>(
            &mut ChaCha12Rng::seed_from_u64(5),
            2,
        ), 1.0)
        .unwrap();
        let scrambled = BathSpec::new(
            rot.matmul(&bath.h_bath).matmul(&rot.dagger()).hermitize(),
            bath.beta,
        )
        .unwrap();
        let (e2, v2) = bath_eigensystem(&scrambled).unwrap();
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a - b).abs() < 1e-10);
        }
        // phase convention: first significant component real positive
        for c in 0..2 {
            let col = v2.col(c);
            let lead = col.iter().find(|z| z.norm() > 1e-8).unwrap();
            assert!(lead.im.abs() < 1e-10 && lead.re > 0.0);
        }
        let _ = Cx::new(0.0f64, 0.0);
    }
}
