//! Spectral kernels: Hermitian eigendecomposition (cyclic Jacobi), complex
//! Schur decomposition (Householder Hessenberg + shifted QR), functions of
//! positive-definite and Hermitian matrices, and a scaling-and-squaring
//! matrix exponential.
//!
//! Everything here targets dense matrices of dimension at most a few dozen;
//! no blocking or balancing is attempted.

use num_complex::Complex;

use super::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::{cone, cre, czero, Cx, Scalar};
use crate::tol;

/// Hermitian eigendecomposition `H = V diag(lambda) V'` with real
/// eigenvalues in ascending order and unitary `V` (eigenvectors in columns).
#[derive(Debug, Clone)]
pub struct HermEig<T: Scalar> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: CMatrix<T>,
}

impl<T: Scalar> HermEig<T> {
    /// `V f(diag) V'` for a scalar function of the eigenvalues.
    pub fn apply_fn(&self, mut f: impl FnMut(T) -> Cx<T>) -> CMatrix<T> {
        let v = &self.eigenvectors;
        let n = self.eigenvalues.len();
        let fd = CMatrix::diag(&self.eigenvalues.iter().map(|&l| f(l)).collect::<Vec<_>>());
        let out = &(v * &fd) * &v.dagger();
        debug_assert_eq!(out.rows(), n);
        out
    }

    /// Rebuild the input matrix (used by reconstruction checks).
    pub fn reconstruct(&self) -> CMatrix<T> {
        self.apply_fn(cre)
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Fails with `NotHermitian` when `|H - H'| > 1e-10 |H|` and with
/// `NotSquare` for rectangular input. Eigenvector columns carry a fixed
/// phase convention: the first component of modulus above `1e-8` times the
/// column max is rotated to the positive real axis, so repeated runs and
/// platforms agree on more than just the subspace.
pub fn herm_eig<T: Scalar>(h: &CMatrix<T>) -> Result<HermEig<T>> {
    let n = h.require_square()?;
    h.require_hermitian(T::real(tol::HERM_TOL))?;
    if n == 0 {
        return Ok(HermEig {
            eigenvalues: vec![],
            eigenvectors: CMatrix::zeros(0, 0),
        });
    }

    let mut a = h.hermitize();
    let mut v = CMatrix::<T>::identity(n);
    let scale = a.norm_fro().max(T::min_positive_value());
    let eps = T::epsilon();
    let conv = scale * eps * T::real(n as f64);

    let mut converged = false;
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + a[(p, q)].norm_sqr();
            }
        }
        let off = (off + off).sqrt();
        if off <= conv {
            converged = true;
            break;
        }

        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let abs_apq = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if abs_apq <= eps * (app.abs() + aqq.abs()) * T::real(0.5) {
                    a[(p, q)] = czero();
                    a[(q, p)] = czero();
                    continue;
                }

                // Unitary 2x2 rotation U = [[c, -conj(s)], [s, c]] with
                // c real, s = sigma e^{-i phi}, phi = arg(apq). Zeroing the
                // off-diagonal element needs t = sigma / c solving
                // t^2 - 2 theta t - 1 = 0; take the root of least modulus.
                let phase = apq / Complex::new(abs_apq, T::zero());
                let theta = (aqq - app) / (abs_apq + abs_apq);
                let t = if theta >= T::zero() {
                    -T::one() / (theta + (theta * theta + T::one()).sqrt())
                } else {
                    T::one() / (-theta + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let sigma = t * c;
                let s = phase.conj().scale(sigma);
                let cc = Complex::new(c, T::zero());

                // rows p, q: left-multiply by U' = [[c, conj(s)], [-s, c]]
                for k in 0..n {
                    let xp = a[(p, k)];
                    let xq = a[(q, k)];
                    a[(p, k)] = cc * xp + s.conj() * xq;
                    a[(q, k)] = cc * xq - s * xp;
                }
                // cols p, q: right-multiply by U
                for k in 0..n {
                    let xp = a[(k, p)];
                    let xq = a[(k, q)];
                    a[(k, p)] = cc * xp + s * xq;
                    a[(k, q)] = cc * xq - s.conj() * xp;
                }
                a[(p, q)] = czero();
                a[(q, p)] = czero();
                a[(p, p)] = cre(a[(p, p)].re);
                a[(q, q)] = cre(a[(q, q)].re);

                for k in 0..n {
                    let xp = v[(k, p)];
                    let xq = v[(k, q)];
                    v[(k, p)] = cc * xp + s * xq;
                    v[(k, q)] = cc * xq - s.conj() * xp;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            context: format!("Jacobi sweep limit on {n}x{n} Hermitian matrix"),
        });
    }

    // Diagonal imaginary parts are rounding debris at most; anything larger
    // would mean the input was not Hermitian after all.
    let imag_cap = scale * T::real(tol::RANK_TOL);
    let mut order: Vec<usize> = (0..n).collect();
    let mut lambda = vec![T::zero(); n];
    for i in 0..n {
        let d = a[(i, i)];
        if d.im.abs() > imag_cap.max(scale * eps * T::real(16.0)) {
            return Err(Error::NotHermitian {
                deviation: d.im.abs().as_f64(),
                tol: imag_cap.as_f64(),
            });
        }
        lambda[i] = d.re;
    }
    order.sort_by(|&i, &j| lambda[i].partial_cmp(&lambda[j]).unwrap());

    let eigenvalues: Vec<T> = order.iter().map(|&i| lambda[i]).collect();
    let mut vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    fix_column_phases(&mut vectors);
    vectors.check_finite("herm_eig")?;

    Ok(HermEig {
        eigenvalues,
        eigenvectors: vectors,
    })
}

/// Rotate each column so its first significant component is real positive.
fn fix_column_phases<T: Scalar>(v: &mut CMatrix<T>) {
    let n = v.rows();
    for c in 0..v.cols() {
        let col_max = (0..n)
            .map(|r| v[(r, c)].norm())
            .fold(T::zero(), |a, b| a.max(b));
        if col_max == T::zero() {
            continue;
        }
        let cut = col_max * T::real(1e-8);
        let lead = (0..n).find(|&r| v[(r, c)].norm() > cut);
        if let Some(r0) = lead {
            let z = v[(r0, c)];
            let phase = z.conj() / Complex::new(z.norm(), T::zero());
            for r in 0..n {
                let x = v[(r, c)] * phase;
                v[(r, c)] = x;
            }
            let fixed = v[(r0, c)];
            v[(r0, c)] = Cx::new(fixed.norm(), T::zero());
        }
    }
}

/// `P^s` for strictly positive-definite `P` through the eigendecomposition.
///
/// Eigenvalues at or below `RANK_TOL * lambda_max` are refused with
/// `SingularOrIndefinite`: a reference state that is not invertible has no
/// reversal, and we make that failure explicit instead of regularizing.
pub fn pd_power<T: Scalar>(p: &CMatrix<T>, s: T) -> Result<CMatrix<T>> {
    let eig = herm_eig(p)?;
    let max = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(T::zero(), |a, b| a.max(b));
    let min = eig
        .eigenvalues
        .iter()
        .cloned()
        .fold(T::infinity(), |a, b| a.min(b));
    let floor = max * T::real(tol::RANK_TOL);
    if !(max > T::zero()) || min <= floor {
        return Err(Error::SingularOrIndefinite {
            min_eig: min.as_f64(),
            max_eig: max.as_f64(),
        });
    }
    let out = eig.apply_fn(|l| cre(l.powf(s)));
    out.check_finite("pd_power")?;
    Ok(out)
}

/// `exp(-i H t)` for Hermitian `H` (`hbar = 1`).
pub fn unitary_of<T: Scalar>(h: &CMatrix<T>, t: T) -> Result<CMatrix<T>> {
    let eig = herm_eig(h)?;
    let out = eig.apply_fn(|l| {
        let phase = -l * t;
        Cx::new(phase.cos(), phase.sin())
    });
    out.check_finite("unitary_of")?;
    Ok(out)
}

/// Complex Schur decomposition `A = Q T Q'` with `T` upper triangular.
#[derive(Debug, Clone)]
pub struct Schur<T: Scalar> {
    pub q: CMatrix<T>,
    pub t: CMatrix<T>,
}

impl<T: Scalar> Schur<T> {
    pub fn eigenvalues(&self) -> Vec<Cx<T>> {
        (0..self.t.rows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Right eigenvector for the eigenvalue at diagonal position `k`,
    /// normalized to unit Euclidean norm.
    ///
    /// Back-substitution on the triangular factor; denominators closer to
    /// zero than machine noise are perturbed, which is harmless for the
    /// well-separated eigenvalues this crate asks for.
    pub fn eigenvector(&self, k: usize) -> Vec<Cx<T>> {
        let n = self.t.rows();
        assert!(k < n);
        let lam = self.t[(k, k)];
        let scale = self.t.norm_fro().max(T::min_positive_value());
        let smallden = scale * T::epsilon();
        let mut y: Vec<Cx<T>> = vec![czero(); n];
        y[k] = cone();
        for j in (0..k).rev() {
            let mut acc: Cx<T> = czero();
            for m in (j + 1)..=k {
                acc = acc + self.t[(j, m)] * y[m];
            }
            let mut den = self.t[(j, j)] - lam;
            if den.norm() < smallden {
                den = Cx::new(smallden, T::zero());
            }
            y[j] = -acc / den;
        }
        let v = self.q.matvec(&y);
        let norm = v
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        v.into_iter().map(|z| z / cre(norm)).collect()
    }
}

/// Complex Schur decomposition by Householder reduction to Hessenberg form
/// followed by explicit single-shift QR with Wilkinson shifts.
pub fn schur<T: Scalar>(a: &CMatrix<T>) -> Result<Schur<T>> {
    let n = a.require_square()?;
    a.check_finite("schur input")?;
    let mut h = a.clone();
    let mut q = CMatrix::<T>::identity(n);
    if n <= 1 {
        return Ok(Schur { q, t: h });
    }

    hessenberg(&mut h, &mut q);

    let eps = T::epsilon();
    let mut hi = n - 1;
    let mut iters_here = 0usize;
    let mut total = 0usize;
    let budget = 60 * n.max(4);

    while hi > 0 {
        // Deflate whenever the last subdiagonal of the active block is
        // negligible against its neighbors.
        let sub = h[(hi, hi - 1)].norm();
        let local = h[(hi - 1, hi - 1)].norm() + h[(hi, hi)].norm();
        let floor = eps * local.max(h.norm_fro() * eps);
        if sub <= eps * local || sub <= floor {
            h[(hi, hi - 1)] = czero();
            hi -= 1;
            iters_here = 0;
            continue;
        }

        total += 1;
        iters_here += 1;
        if total > budget {
            return Err(Error::NoConvergence {
                context: format!("QR iteration budget exhausted on {n}x{n} matrix"),
            });
        }

        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo, lo - 1)].norm();
            let l = h[(lo - 1, lo - 1)].norm() + h[(lo, lo)].norm();
            if s <= eps * l {
                h[(lo, lo - 1)] = czero();
                break;
            }
            lo -= 1;
        }

        let mu = if iters_here % 12 == 0 {
            // exceptional shift against slow convergence
            h[(hi, hi)] + cre(h[(hi, hi - 1)].norm() * T::real(0.75))
        } else {
            wilkinson_shift(&h, hi)
        };

        qr_step(&mut h, &mut q, lo, hi, mu);
    }

    // Scrub rounding below the diagonal.
    for i in 0..n {
        for j in 0..i {
            h[(i, j)] = czero();
        }
    }
    h.check_finite("schur")?;
    Ok(Schur { q, t: h })
}

fn hessenberg<T: Scalar>(h: &mut CMatrix<T>, q: &mut CMatrix<T>) {
    let n = h.rows();
    for k in 0..n.saturating_sub(2) {
        let mut x: Vec<Cx<T>> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        let norm_x = x
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt();
        if norm_x <= T::min_positive_value() {
            continue;
        }
        let x0 = x[0];
        let alpha = if x0.norm() > T::zero() {
            -(x0 / cre(x0.norm())) * cre(norm_x)
        } else {
            cre(-norm_x)
        };
        x[0] = x[0] - alpha;
        let vnorm2 = x
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b);
        if vnorm2 <= T::min_positive_value() {
            continue;
        }
        let two_over = T::real(2.0) / vnorm2;
        let m = x.len();

        // left: rows k+1.. of all columns
        for j in 0..n {
            let mut w = czero();
            for i in 0..m {
                w = w + x[i].conj() * h[(k + 1 + i, j)];
            }
            let w = w.scale(two_over);
            for i in 0..m {
                let val = h[(k + 1 + i, j)] - x[i] * w;
                h[(k + 1 + i, j)] = val;
            }
        }
        // right: cols k+1.. of all rows
        for i in 0..n {
            let mut w = czero();
            for j in 0..m {
                w = w + h[(i, k + 1 + j)] * x[j];
            }
            let w = w.scale(two_over);
            for j in 0..m {
                let val = h[(i, k + 1 + j)] - w * x[j].conj();
                h[(i, k + 1 + j)] = val;
            }
        }
        // accumulate into q (right-multiply)
        for i in 0..n {
            let mut w = czero();
            for j in 0..m {
                w = w + q[(i, k + 1 + j)] * x[j];
            }
            let w = w.scale(two_over);
            for j in 0..m {
                let val = q[(i, k + 1 + j)] - w * x[j].conj();
                q[(i, k + 1 + j)] = val;
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = czero();
        }
    }
}

/// Eigenvalue of the trailing 2x2 block closest to the corner entry.
fn wilkinson_shift<T: Scalar>(h: &CMatrix<T>, hi: usize) -> Cx<T> {
    let a = h[(hi - 1, hi - 1)];
    let b = h[(hi - 1, hi)];
    let c = h[(hi, hi - 1)];
    let d = h[(hi, hi)];
    let tr = a + d;
    let det = a * d - b * c;
    let half = cre(T::real(0.5));
    let mid = tr * half;
    let disc = (mid * mid - det).sqrt();
    let l1 = mid + disc;
    let l2 = mid - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit-shift QR step on the active block `lo..=hi`.
fn qr_step<T: Scalar>(h: &mut CMatrix<T>, q: &mut CMatrix<T>, lo: usize, hi: usize, mu: Cx<T>) {
    let n = h.rows();
    for i in lo..=hi {
        let v = h[(i, i)] - mu;
        h[(i, i)] = v;
    }

    let mut rot: Vec<(T, Cx<T>)> = Vec::with_capacity(hi - lo);
    for k in lo..hi {
        let f = h[(k, k)];
        let g = h[(k + 1, k)];
        let (c, s) = givens(f, g);
        rot.push((c, s));
        // G' rows k, k+1 where G' = [[c, s], [-conj(s), c]] applied from the
        // left zeroes h[k+1][k]: wait, rows update uses [[c, s],[ -conj(s), c]]
        for j in k..n {
            let xk = h[(k, j)];
            let xk1 = h[(k + 1, j)];
            h[(k, j)] = xk.scale(c) + s * xk1;
            h[(k + 1, j)] = xk1.scale(c) - s.conj() * xk;
        }
        h[(k + 1, k)] = czero();
    }
    for (k, &(c, s)) in (lo..hi).zip(rot.iter()) {
        // right-multiply by the adjoint rotation on columns k, k+1
        let top = (k + 1).min(hi);
        for i in 0..=top.min(n - 1) {
            let xk = h[(i, k)];
            let xk1 = h[(i, k + 1)];
            h[(i, k)] = xk.scale(c) + s.conj() * xk1;
            h[(i, k + 1)] = xk1.scale(c) - s * xk;
        }
        for i in 0..n {
            let xk = q[(i, k)];
            let xk1 = q[(i, k + 1)];
            q[(i, k)] = xk.scale(c) + s.conj() * xk1;
            q[(i, k + 1)] = xk1.scale(c) - s * xk;
        }
    }

    for i in lo..=hi {
        let v = h[(i, i)] + mu;
        h[(i, i)] = v;
    }
}

/// Complex Givens pair `(c, s)` with `c` real such that
/// `[[c, s], [-conj(s), c]] [f; g] = [r; 0]`.
fn givens<T: Scalar>(f: Cx<T>, g: Cx<T>) -> (T, Cx<T>) {
    let gn = g.norm();
    if gn == T::zero() {
        return (T::one(), czero());
    }
    let fn_ = f.norm();
    let r = (fn_ * fn_ + gn * gn).sqrt();
    if fn_ == T::zero() {
        return (T::zero(), g.conj() / cre(gn));
    }
    let c = fn_ / r;
    let s = (f / cre(fn_)) * (g.conj() / cre(r));
    (c, s)
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm<T: Scalar>(a: &CMatrix<T>) -> Result<CMatrix<T>> {
    let n = a.require_square()?;
    a.check_finite("expm input")?;
    let norm = a.norm_fro();
    let mut s = 0u32;
    let half = T::real(0.5);
    let mut scaled = a.clone();
    let mut nn = norm;
    while nn > half && s < 48 {
        scaled = scaled.scale_re(half);
        nn = nn * half;
        s += 1;
    }

    let mut result = CMatrix::<T>::identity(n);
    let mut term = CMatrix::<T>::identity(n);
    let cutoff = T::epsilon() * T::real(0.25);
    for k in 1..200 {
        term = term.matmul(&scaled).scale_re(T::one() / T::real(k as f64));
        result = &result + &term;
        if term.norm_fro() <= cutoff * result.norm_fro().max(T::one()) {
            break;
        }
    }
    for _ in 0..s {
        result = result.matmul(&result);
    }
    result.check_finite("expm")?;
    Ok(result)
}
