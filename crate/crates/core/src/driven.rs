//! Driven protocols: time-ordered heat-labeled channels with endpoint
//! projective measurements, trajectory enumeration and sampling, the
//! microscopic-reversibility ratio and the Jarzynski verifier.
//!
//! A trajectory is the record `(e0; alpha_1 .. alpha_tau; e_tau)`: initial
//! basis index, one Kraus index per step, final basis index. No projection
//! happens at intermediate times; only the interaction labels are recorded.
//!
//! The reverse protocol replaces step `t` by the pi-dual of step
//! `tau + 1 - t` with respect to the thermal state of that step's system
//! Hamiltonian, negating heat labels and swapping the endpoint bases. The
//! microscopic-reversibility check compares `log(p / p~)` against
//! `-beta Q` on conditional trajectory probabilities (given the starting
//! index), which is the form in which the ratio is independent of how the
//! endpoint states are populated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::classical::ProbVector;
use crate::error::{Error, Result};
use crate::mat::{herm_eig, CMatrix};
use crate::reversal::{reverse_channel, PiDual, ReverseOpts};
use crate::scalar::{czero, Cx, Scalar};
use crate::thermal::{thermal_state, BathSpec, CouplingSpec, HeatLabeledChannel};
use crate::tol;

/// Time-ordered sequence of heat-labeled channels.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ProtocolRepr<T>", into = "ProtocolRepr<T>")]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
pub struct Protocol<T: Scalar> {
    steps: Vec<HeatLabeledChannel<T>>,
    h_sys: Vec<CMatrix<T>>,
    beta: T,
    init_basis: CMatrix<T>,
    final_basis: CMatrix<T>,
    eps: Option<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound(
    serialize = "T: Serialize",
    deserialize = "T: serde::de::DeserializeOwned"
))]
struct ProtocolRepr<T: Scalar> {
    beta: T,
    steps: Vec<HeatLabeledChannel<T>>,
    hsys: Vec<CMatrix<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    init_basis: Option<CMatrix<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    final_basis: Option<CMatrix<T>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    eps: Option<T>,
}

impl<T: Scalar + Serialize> From<Protocol<T>> for ProtocolRepr<T> {
    fn from(p: Protocol<T>) -> Self {
        ProtocolRepr {
            beta: p.beta,
            steps: p.steps,
            hsys: p.h_sys,
            init_basis: Some(p.init_basis),
            final_basis: Some(p.final_basis),
            eps: p.eps,
        }
    }
}

impl<T: Scalar + serde::de::DeserializeOwned> TryFrom<ProtocolRepr<T>> for Protocol<T> {
    type Error = Error;

    fn try_from(r: ProtocolRepr<T>) -> Result<Self> {
        Protocol::with_bases(r.steps, r.hsys, r.beta, r.init_basis, r.final_basis, r.eps)
    }
}

/// One dynamical history with its heat record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub e0: usize,
    pub alphas: Vec<usize>,
    pub e_tau: usize,
    pub heats: Vec<T>,
    pub q_total: T,
}

/// Microscopic-reversibility record for one trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MrReport {
    pub log_ratio: f64,
    pub minus_beta_q: f64,
    pub residual: f64,
    pub p_fwd: f64,
    pub p_rev: f64,
}

/// Per-trajectory row of an exhaustive microscopic-reversibility table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MrRow<T> {
    pub trajectory: Trajectory<T>,
    /// probability under the supplied initial distribution
    pub p_fwd: f64,
    /// conditional forward probability (point mass at `e0`)
    pub p_fwd_cond: f64,
    /// conditional reverse probability; absent when unreachable
    pub p_rev_cond: Option<f64>,
    pub log_ratio: Option<f64>,
    pub residual: Option<f64>,
}

/// Aggregates over an [`MrRow`] table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MrSummary {
    pub trajectories: usize,
    pub unreachable: usize,
    pub max_residual: f64,
    /// residual averaged with forward-probability weights
    pub mean_residual: f64,
    pub total_probability: f64,
}

/// Jarzynski identity verdict: `lhs = <exp(-beta W)>`, `rhs = Z_tau / Z_1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JarzynskiReport {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

impl<T: Scalar> Protocol<T> {
    /// Assemble a protocol with explicit endpoint bases (columns are the
    /// measured states). Bases default to the energy eigenbases of the
    /// first and last system Hamiltonians.
    pub fn with_bases(
        steps: Vec<HeatLabeledChannel<T>>,
        h_sys: Vec<CMatrix<T>>,
        beta: T,
        init_basis: Option<CMatrix<T>>,
        final_basis: Option<CMatrix<T>>,
        eps: Option<T>,
    ) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidInput {
                context: "protocol needs at least one step".into(),
            });
        }
        if steps.len() != h_sys.len() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "{} steps but {} system Hamiltonians",
                    steps.len(),
                    h_sys.len()
                ),
            });
        }
        let d = steps[0].dim();
        for (i, s) in steps.iter().enumerate() {
            if s.dim() != d {
                return Err(Error::DimensionMismatch {
                    context: format!("step {i} acts on dimension {}, expected {d}", s.dim()),
                });
            }
            if s.channel.heat().is_none() {
                return Err(Error::InvalidInput {
                    context: format!("step {i} has no heat labels"),
                });
            }
        }
        for (i, h) in h_sys.iter().enumerate() {
            if h.rows() != d || h.cols() != d {
                return Err(Error::DimensionMismatch {
                    context: format!("system Hamiltonian {i} is {}x{}", h.rows(), h.cols()),
                });
            }
            h.require_hermitian(T::real(tol::HERM_TOL))?;
        }
        let init_basis = match init_basis {
            Some(b) => b,
            None => herm_eig(&h_sys[0])?.eigenvectors,
        };
        let final_basis = match final_basis {
            Some(b) => b,
            None => herm_eig(h_sys.last().unwrap())?.eigenvectors,
        };
        for (name, b) in [("init", &init_basis), ("final", &final_basis)] {
            if b.rows() != d || b.cols() != d {
                return Err(Error::DimensionMismatch {
                    context: format!("{name} basis is {}x{}", b.rows(), b.cols()),
                });
            }
            let dev = b.dagger().matmul(b).dist_to_identity();
            if dev > T::real(tol::BASIS_TOL) {
                return Err(Error::BasisNotOrthonormal {
                    deviation: dev.as_f64(),
                    tol: tol::BASIS_TOL,
                });
            }
        }
        Ok(Self {
            steps,
            h_sys,
            beta,
            init_basis,
            final_basis,
            eps,
        })
    }

    /// Protocol of thermostated channels over a list of per-step system
    /// Hamiltonians sharing one bath, coupling and step time.
    pub fn thermostated(
        h_sys_list: Vec<CMatrix<T>>,
        bath: &BathSpec<T>,
        h_int: &CMatrix<T>,
        eps: T,
        t: T,
    ) -> Result<Self> {
        let cpl = CouplingSpec::new(h_int.clone(), eps)?;
        let steps = h_sys_list
            .iter()
            .map(|h| crate::thermal::thermostated_channel(h, bath, &cpl, t))
            .collect::<Result<Vec<_>>>()?;
        Self::with_bases(steps, h_sys_list, bath.beta, None, None, Some(eps))
    }

    pub fn tau(&self) -> usize {
        self.steps.len()
    }

    pub fn dim_sys(&self) -> usize {
        self.steps[0].dim()
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn eps(&self) -> Option<T> {
        self.eps
    }

    pub fn steps(&self) -> &[HeatLabeledChannel<T>] {
        &self.steps
    }

    pub fn h_sys(&self) -> &[CMatrix<T>] {
        &self.h_sys
    }

    pub fn init_basis(&self) -> &CMatrix<T> {
        &self.init_basis
    }

    pub fn final_basis(&self) -> &CMatrix<T> {
        &self.final_basis
    }

    /// Total number of trajectory records.
    pub fn trajectory_count(&self) -> u128 {
        let d = self.dim_sys() as u128;
        self.steps
            .iter()
            .fold(d * d, |acc, s| acc.saturating_mul(s.channel.len() as u128))
    }

    /// Assemble a trajectory record, filling heats from the step labels.
    pub fn trajectory(&self, e0: usize, alphas: Vec<usize>, e_tau: usize) -> Result<Trajectory<T>> {
        let d = self.dim_sys();
        if e0 >= d {
            return Err(Error::IndexOutOfRange { index: e0, len: d });
        }
        if e_tau >= d {
            return Err(Error::IndexOutOfRange { index: e_tau, len: d });
        }
        if alphas.len() != self.tau() {
            return Err(Error::DimensionMismatch {
                context: format!("{} Kraus indices for {} steps", alphas.len(), self.tau()),
            });
        }
        let mut heats = Vec::with_capacity(alphas.len());
        for (t, &a) in alphas.iter().enumerate() {
            let k = self.steps[t].channel.len();
            if a >= k {
                return Err(Error::IndexOutOfRange { index: a, len: k });
            }
            heats.push(self.steps[t].heat(a));
        }
        let q_total = heats.iter().cloned().sum();
        Ok(Trajectory {
            e0,
            alphas,
            e_tau,
            heats,
            q_total,
        })
    }

    /// Matrix element `<e_tau| A^(tau) ... A^(1) |e0>`.
    pub fn amplitude(&self, tr: &Trajectory<T>) -> Result<Cx<T>> {
        if tr.alphas.len() != self.tau() {
            return Err(Error::DimensionMismatch {
                context: format!("{} Kraus indices for {} steps", tr.alphas.len(), self.tau()),
            });
        }
        let mut v = self.init_basis.col(tr.e0);
        for (t, &a) in tr.alphas.iter().enumerate() {
            let k = self.steps[t].channel.len();
            if a >= k {
                return Err(Error::IndexOutOfRange { index: a, len: k });
            }
            v = self.steps[t].channel.kraus()[a].matvec(&v);
        }
        let f = self.final_basis.col(tr.e_tau);
        let mut amp = czero();
        for (x, y) in f.iter().zip(&v) {
            amp = amp + x.conj() * *y;
        }
        Ok(amp)
    }

    /// Probability of the record under `initial`:
    /// `initial[e0] |<e_tau| A^(tau) .. A^(1) |e0>|^2`.
    pub fn trajectory_prob(&self, tr: &Trajectory<T>, initial: &ProbVector<T>) -> Result<T> {
        if initial.len() != self.dim_sys() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "initial distribution over {} states, system dimension {}",
                    initial.len(),
                    self.dim_sys()
                ),
            });
        }
        let w = initial.get(tr.e0);
        if w == T::zero() {
            return Ok(T::zero());
        }
        let amp = self.amplitude(tr)?;
        Ok(w * amp.norm_sqr())
    }

    /// Exhaustive list of `(trajectory, probability)` with `p > p_floor`,
    /// in lexicographic `(e0, alphas.., e_tau)` order.
    pub fn enumerate_trajectories(
        &self,
        initial: &ProbVector<T>,
    ) -> Result<Vec<(Trajectory<T>, T)>> {
        self.enumerate_with(initial, tol::ENUM_CAP, T::real(tol::P_FLOOR))
    }

    pub fn enumerate_with(
        &self,
        initial: &ProbVector<T>,
        cap: u128,
        p_floor: T,
    ) -> Result<Vec<(Trajectory<T>, T)>> {
        let count = self.trajectory_count();
        if count > cap {
            return Err(Error::EnumerationTooLarge { count, cap });
        }
        if initial.len() != self.dim_sys() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "initial distribution over {} states, system dimension {}",
                    initial.len(),
                    self.dim_sys()
                ),
            });
        }
        let d = self.dim_sys();
        let mut out = Vec::new();
        let mut alphas = vec![0usize; self.tau()];
        for e0 in 0..d {
            let w = initial.get(e0);
            let v0 = self.init_basis.col(e0);
            self.enumerate_rec(0, &mut alphas, &v0, e0, w, p_floor, &mut out);
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn enumerate_rec(
        &self,
        t: usize,
        alphas: &mut Vec<usize>,
        v: &[Cx<T>],
        e0: usize,
        w: T,
        p_floor: T,
        out: &mut Vec<(Trajectory<T>, T)>,
    ) {
        if t == self.tau() {
            for e_tau in 0..self.dim_sys() {
                let f = self.final_basis.col(e_tau);
                let mut amp = czero();
                for (x, y) in f.iter().zip(v) {
                    amp = amp + x.conj() * *y;
                }
                let p = w * amp.norm_sqr();
                if p > p_floor {
                    let tr = self
                        .trajectory(e0, alphas.clone(), e_tau)
                        .expect("indices in range");
                    out.push((tr, p));
                }
            }
            return;
        }
        for a in 0..self.steps[t].channel.len() {
            let next = self.steps[t].channel.kraus()[a].matvec(v);
            let mass: T = next.iter().map(|z| z.norm_sqr()).sum();
            // The branch can only lose amplitude from here on; prune when
            // the best case is already below the floor.
            if w * mass <= p_floor {
                continue;
            }
            alphas[t] = a;
            self.enumerate_rec(t + 1, alphas, &next, e0, w, p_floor, out);
        }
        alphas[t] = 0;
    }

    /// The time-reversed protocol: step `t` becomes the pi-dual of step
    /// `tau + 1 - t` with respect to `thermal_state(H_t, beta)`, heat labels
    /// negated, bath index pairs swapped, endpoint bases exchanged.
    ///
    /// Finite-coupling thermostated steps hold their thermal state only to
    /// first order, so the balance gate scales with the recorded coupling:
    /// `max(BALANCE_TOL, 10 eps)`.
    pub fn reverse(&self) -> Result<Protocol<T>> {
        let balance_tol = match self.eps {
            Some(e) => T::real(tol::BALANCE_TOL).max(T::real(tol::BALANCE_EPS_SCALE) * e),
            None => T::real(tol::BALANCE_TOL),
        };
        self.reverse_with(balance_tol)
    }

    pub fn reverse_with(&self, balance_tol: T) -> Result<Protocol<T>> {
        let tau = self.tau();
        let mut steps = Vec::with_capacity(tau);
        let mut h_sys = Vec::with_capacity(tau);
        for t in (0..tau).rev() {
            let h = &self.h_sys[t];
            let (pi_t, _) = thermal_state(h, self.beta)?;
            let dual = PiDual::new(&pi_t)?;
            let cond = dual.inv_sqrt_pi().norm_fro();
            let tcp_tol = T::real(tol::REVERSED_TCP_TOL).max(
                balance_tol * cond * cond * T::real(2.0),
            );
            let opts = ReverseOpts {
                balance_tol,
                tcp_tol,
            };
            let rev_channel = reverse_channel(&self.steps[t].channel, &pi_t, &opts)?;
            let index_map = self.steps[t]
                .index_map
                .iter()
                .map(|&(i, j)| (j, i))
                .collect();
            steps.push(HeatLabeledChannel {
                channel: rev_channel,
                index_map,
                bath_energies: self.steps[t].bath_energies.clone(),
                beta: self.steps[t].beta,
            });
            h_sys.push(h.clone());
        }
        Protocol::with_bases(
            steps,
            h_sys,
            self.beta,
            Some(self.final_basis.clone()),
            Some(self.init_basis.clone()),
            self.eps,
        )
    }

    /// The trajectory record paired with `tr` in the reversed protocol.
    pub fn reversed_trajectory(&self, rev: &Protocol<T>, tr: &Trajectory<T>) -> Result<Trajectory<T>> {
        let alphas: Vec<usize> = tr.alphas.iter().rev().cloned().collect();
        rev.trajectory(tr.e_tau, alphas, tr.e0)
    }

    /// Microscopic reversibility for one trajectory.
    ///
    /// Conditional probabilities on both sides: the forward record given
    /// the start `e0`, the reversed record given the start `e_tau`. Errors
    /// with `ZeroProbabilityBranch` when either direction is unreachable.
    pub fn mr_check(&self, tr: &Trajectory<T>) -> Result<MrReport> {
        let rev = self.reverse()?;
        self.mr_check_with(&rev, tr)
    }

    /// Same as [`Self::mr_check`] with a precomputed reverse protocol.
    pub fn mr_check_with(&self, rev: &Protocol<T>, tr: &Trajectory<T>) -> Result<MrReport> {
        let d = self.dim_sys();
        let p_floor = T::real(tol::P_FLOOR);
        let p_fwd = self.trajectory_prob(tr, &ProbVector::point(d, tr.e0))?;
        if p_fwd <= p_floor {
            return Err(Error::ZeroProbabilityBranch {
                index: tr.e0,
                p: p_fwd.as_f64(),
            });
        }
        let rtr = self.reversed_trajectory(rev, tr)?;
        let p_rev = rev.trajectory_prob(&rtr, &ProbVector::point(d, rtr.e0))?;
        if p_rev <= p_floor {
            return Err(Error::ZeroProbabilityBranch {
                index: rtr.e0,
                p: p_rev.as_f64(),
            });
        }
        let log_ratio = p_fwd.ln() - p_rev.ln();
        let minus_beta_q = -self.beta * tr.q_total;
        let residual = (log_ratio - minus_beta_q).abs();
        Ok(MrReport {
            log_ratio: log_ratio.as_f64(),
            minus_beta_q: minus_beta_q.as_f64(),
            residual: residual.as_f64(),
            p_fwd: p_fwd.as_f64(),
            p_rev: p_rev.as_f64(),
        })
    }

    /// Exhaustive microscopic-reversibility table over every trajectory
    /// with weighted probability above `p_cut` under `initial`.
    pub fn mr_table(
        &self,
        initial: &ProbVector<T>,
        p_cut: T,
    ) -> Result<(Vec<MrRow<T>>, MrSummary)> {
        let rev = self.reverse()?;
        let records = self.enumerate_with(initial, tol::ENUM_CAP, p_cut)?;
        let p_floor = T::real(tol::P_FLOOR);
        let d = self.dim_sys();
        let mut rows = Vec::with_capacity(records.len());
        let mut unreachable = 0usize;
        let mut max_res = 0.0f64;
        let mut mean_num = 0.0f64;
        let mut mean_den = 0.0f64;
        let mut total_p = 0.0f64;
        for (tr, p) in records {
            let p_fwd_cond = self.trajectory_prob(&tr, &ProbVector::point(d, tr.e0))?;
            let rtr = self.reversed_trajectory(&rev, &tr)?;
            let p_rev_cond = rev.trajectory_prob(&rtr, &ProbVector::point(d, rtr.e0))?;
            total_p += p.as_f64();
            if p_rev_cond <= p_floor || p_fwd_cond <= p_floor {
                unreachable += 1;
                rows.push(MrRow {
                    trajectory: tr,
                    p_fwd: p.as_f64(),
                    p_fwd_cond: p_fwd_cond.as_f64(),
                    p_rev_cond: None,
                    log_ratio: None,
                    residual: None,
                });
                continue;
            }
            let log_ratio = (p_fwd_cond.ln() - p_rev_cond.ln()).as_f64();
            let minus_beta_q = (-self.beta * tr.q_total).as_f64();
            let residual = (log_ratio - minus_beta_q).abs();
            max_res = max_res.max(residual);
            mean_num += p.as_f64() * residual;
            mean_den += p.as_f64();
            rows.push(MrRow {
                trajectory: tr,
                p_fwd: p.as_f64(),
                p_fwd_cond: p_fwd_cond.as_f64(),
                p_rev_cond: Some(p_rev_cond.as_f64()),
                log_ratio: Some(log_ratio),
                residual: Some(residual),
            });
        }
        let summary = MrSummary {
            trajectories: rows.len(),
            unreachable,
            max_residual: max_res,
            mean_residual: if mean_den > 0.0 { mean_num / mean_den } else { 0.0 },
            total_probability: total_p,
        };
        Ok((rows, summary))
    }

    /// Draw `n` trajectories by sequential interaction sampling.
    ///
    /// Each sample uses its own counter-based RNG stream derived from the
    /// seed and the sample ordinal, so the output is identical for any
    /// worker count; parallelism comes from the ambient rayon pool.
    pub fn sample_trajectories(
        &self,
        initial: &ProbVector<T>,
        n: usize,
        seed: u64,
    ) -> Result<Vec<Trajectory<T>>> {
        if initial.len() != self.dim_sys() {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "initial distribution over {} states, system dimension {}",
                    initial.len(),
                    self.dim_sys()
                ),
            });
        }
        (0..n)
            .into_par_iter()
            .map(|ordinal| self.sample_one(initial, seed, ordinal as u64))
            .collect()
    }

    fn sample_one(&self, initial: &ProbVector<T>, seed: u64, ordinal: u64) -> Result<Trajectory<T>> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(ordinal.wrapping_add(1));
        let d = self.dim_sys();

        let draw = |rng: &mut ChaCha12Rng, weights: &[T]| -> usize {
            let total: T = weights.iter().cloned().sum();
            let u = T::real(rng.gen::<f64>()) * total;
            let mut acc = T::zero();
            for (k, &w) in weights.iter().enumerate() {
                acc = acc + w;
                if u < acc {
                    return k;
                }
            }
            weights.len() - 1
        };

        let w0: Vec<T> = (0..d).map(|k| initial.get(k)).collect();
        let e0 = draw(&mut rng, &w0);
        let mut v = self.init_basis.col(e0);
        let mut alphas = Vec::with_capacity(self.tau());
        for step in &self.steps {
            let weights: Vec<T> = step
                .channel
                .kraus()
                .iter()
                .map(|a| {
                    let av = a.matvec(&v);
                    av.iter().map(|z| z.norm_sqr()).sum()
                })
                .collect();
            let a = draw(&mut rng, &weights);
            alphas.push(a);
            v = step.channel.kraus()[a].matvec(&v);
            let norm: T = v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
            for z in &mut v {
                *z = *z / Cx::new(norm, T::zero());
            }
        }
        let weights: Vec<T> = (0..d)
            .map(|k| {
                let f = self.final_basis.col(k);
                let mut amp = czero();
                for (x, y) in f.iter().zip(&v) {
                    amp = amp + x.conj() * *y;
                }
                amp.norm_sqr()
            })
            .collect();
        let e_tau = draw(&mut rng, &weights);
        self.trajectory(e0, alphas, e_tau)
    }

    /// Jarzynski identity by exhaustive enumeration.
    ///
    /// Work is the two-point first-law bookkeeping
    /// `W = (E_tau[e_tau] - E_1[e0]) - Q`, the initial distribution is the
    /// thermal occupation of the first Hamiltonian, and the endpoint bases
    /// must be energy eigenbases (`NotEnergyEigenbasis` otherwise).
    pub fn jarzynski_check(&self) -> Result<JarzynskiReport> {
        let e_init = self.basis_energies(&self.init_basis, &self.h_sys[0])?;
        let e_final = self.basis_energies(&self.final_basis, self.h_sys.last().unwrap())?;

        let log_z = |es: &[T]| -> T {
            let m = es.iter().cloned().fold(T::infinity(), |a, b| a.min(b));
            let s: T = es.iter().map(|&e| (-self.beta * (e - m)).exp()).sum();
            s.ln() - self.beta * m
        };
        let log_z1 = log_z(&e_init);
        let log_zt = log_z(&e_final);
        let rhs = (log_zt - log_z1).exp();

        let m = e_init.iter().cloned().fold(T::infinity(), |a, b| a.min(b));
        let weights: Vec<T> = e_init.iter().map(|&e| (-self.beta * (e - m)).exp()).collect();
        let z: T = weights.iter().cloned().sum();
        let initial = ProbVector::new(
            weights.iter().map(|&w| w / z).collect(),
            T::real(1e-9),
        )?;

        let records = self.enumerate_with(&initial, tol::ENUM_CAP, T::zero())?;
        let mut lhs = T::zero();
        for (tr, p) in records {
            let work = (e_final[tr.e_tau] - e_init[tr.e0]) - tr.q_total;
            lhs = lhs + p * (-self.beta * work).exp();
        }
        let rel = ((lhs - rhs) / rhs).abs();
        Ok(JarzynskiReport {
            lhs: lhs.as_f64(),
            rhs: rhs.as_f64(),
            rel_err: rel.as_f64(),
        })
    }

    /// Diagonal of `B' H B`, rejecting bases that do not diagonalize `H`.
    fn basis_energies(&self, basis: &CMatrix<T>, h: &CMatrix<T>) -> Result<Vec<T>> {
        let m = basis.dagger().matmul(h).matmul(basis);
        let n = m.rows();
        let mut off = T::zero();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off + m[(i, j)].norm_sqr();
                }
            }
        }
        let off = off.sqrt();
        if off > T::real(1e-8) * h.norm_fro().max(T::one()) {
            return Err(Error::NotEnergyEigenbasis {
                deviation: off.as_f64(),
            });
        }
        Ok((0..n).map(|i| m[(i, i)].re).collect())
    }
}

/// Frequency comparison between sampled trajectories and enumeration.
///
/// Returns `(cells, within_band)`: the number of enumerated cells with
/// expected count at least `min_expect`, and how many of those have
/// `|observed - expected| <= 3 sigma` under the multinomial.
pub fn sampling_consistency<T: Scalar>(
    protocol: &Protocol<T>,
    initial: &ProbVector<T>,
    samples: &[Trajectory<T>],
    min_expect: f64,
) -> Result<(usize, usize)> {
    use std::collections::HashMap;

    let records = protocol.enumerate_trajectories(initial)?;
    let n = samples.len() as f64;
    let mut counts: HashMap<(usize, Vec<usize>, usize), usize> = HashMap::new();
    for s in samples {
        *counts
            .entry((s.e0, s.alphas.clone(), s.e_tau))
            .or_insert(0) += 1;
    }
    let mut cells = 0usize;
    let mut ok = 0usize;
    for (tr, p) in &records {
        let expect = p.as_f64() * n;
        if expect < min_expect {
            continue;
        }
        cells += 1;
        let observed = *counts
            .get(&(tr.e0, tr.alphas.clone(), tr.e_tau))
            .unwrap_or(&0) as f64;
        let sigma = (expect * (1.0 - p.as_f64())).sqrt().max(1e-9);
        if (observed - expect).abs() <= 3.0 * sigma {
            ok += 1;
        }
    }
    Ok((cells, ok))
}
