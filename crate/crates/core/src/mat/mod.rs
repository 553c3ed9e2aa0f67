//! Dense complex matrix kernel.
//!
//! Row-major storage; composite spaces always order the system factor
//! first, so a joint index is `s * dim_env + e`. This convention is fixed
//! globally and the bath index maps in [`crate::thermal`] depend on it.

mod eig;

pub use eig::{expm, herm_eig, pd_power, schur, unitary_of, HermEig, Schur};

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{czero, Cx, Scalar};

/// Which factor survives a partial trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    System,
    Environment,
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Cx<T>>,
}

impl<T: Scalar> CMatrix<T> {
    /// Build from row-major entries; the length must be `rows * cols` and
    /// every entry finite.
    pub fn new(rows: usize, cols: usize, data: Vec<Cx<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "matrix data length {} does not match {}x{}",
                    data.len(),
                    rows,
                    cols
                ),
            });
        }
        let m = Self { rows, cols, data };
        m.check_finite("construction")?;
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![czero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cx::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Cx<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Diagonal matrix from complex entries.
    pub fn diag(entries: &[Cx<T>]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn diag_re(entries: &[T]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = Cx::new(e, T::zero());
        }
        m
    }

    /// Column basis vector `|k>` as a `d x 1` matrix is rarely needed;
    /// this returns it as a plain vector.
    pub fn basis_vector(dim: usize, k: usize) -> Vec<Cx<T>> {
        let mut v = vec![czero(); dim];
        v[k] = Cx::new(T::one(), T::zero());
        v
    }

    /// Outer product `u v'` (a rank-one matrix).
    pub fn outer(u: &[Cx<T>], v: &[Cx<T>]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn require_square(&self) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.rows && j < self.cols);
        i * self.cols + j
    }

    pub fn data(&self) -> &[Cx<T>] {
        &self.data
    }

    pub fn col(&self, j: usize) -> Vec<Cx<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn scale(&self, a: Cx<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * a).collect(),
        }
    }

    pub fn scale_re(&self, a: T) -> Self {
        self.scale(Cx::new(a, T::zero()))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul dimension mismatch {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out[(i, j)] + a * rhs[(k, j)];
                    out[(i, j)] = v;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Cx<T>]) -> Vec<Cx<T>> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        let mut out = vec![czero(); self.rows];
        for i in 0..self.rows {
            let mut acc = czero();
            for j in 0..self.cols {
                acc = acc + self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn trace(&self) -> Cx<T> {
        let n = self.rows.min(self.cols);
        (0..n).fold(czero(), |acc, i| acc + self[(i, i)])
    }

    pub fn norm_fro(&self) -> T {
        self.data
            .iter()
            .map(|x| x.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|x| x.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// Frobenius distance `|A - B|`.
    pub fn dist_fro(&self, other: &Self) -> T {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn dist_to_identity(&self) -> T {
        self.dist_fro(&Self::identity(self.rows))
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|x| x.re.is_finite() && x.im.is_finite())
    }

    pub(crate) fn check_finite(&self, context: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite {
                context: context.to_string(),
            })
        }
    }

    /// `|A - A'|`, zero for Hermitian input.
    pub fn herm_deviation(&self) -> T {
        if !self.is_square() {
            return T::infinity();
        }
        let mut acc = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self[(i, j)] - self[(j, i)].conj();
                acc = acc + d.norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// `(A + A') / 2`.
    pub fn hermitize(&self) -> Self {
        let half = T::real(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self[(i, j)] + self[(j, i)].conj()).scale(half)
        })
    }

    /// Fails unless `|A - A'| <= tol * |A|`.
    pub fn require_hermitian(&self, rel_tol: T) -> Result<()> {
        self.require_square()?;
        let dev = self.herm_deviation();
        let tol = rel_tol * self.norm_fro().max(T::one());
        if dev <= tol {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                deviation: dev.as_f64(),
                tol: tol.as_f64(),
            })
        }
    }

    /// Kronecker product; the left factor is the slow (outer) index.
    pub fn kron(&self, other: &Self) -> Self {
        let (ra, ca) = (self.rows, self.cols);
        let (rb, cb) = (other.rows, other.cols);
        Self::from_fn(ra * rb, ca * cb, |i, j| {
            self[(i / rb, j / cb)] * other[(i % rb, j % cb)]
        })
    }

    /// Partial trace of an operator on a bipartite space with the system
    /// factor first (joint index `s * dim_env + e`).
    pub fn partial_trace(&self, dim_sys: usize, dim_env: usize, keep: Keep) -> Result<Self> {
        let d = dim_sys * dim_env;
        if self.rows != d || self.cols != d {
            return Err(Error::DimensionMismatch {
                context: format!(
                    "partial trace expects a {d}x{d} matrix for {dim_sys}x{dim_env}, got {}x{}",
                    self.rows, self.cols
                ),
            });
        }
        let out = match keep {
            Keep::System => Self::from_fn(dim_sys, dim_sys, |s1, s2| {
                (0..dim_env).fold(czero(), |acc, e| {
                    acc + self[(s1 * dim_env + e, s2 * dim_env + e)]
                })
            }),
            Keep::Environment => Self::from_fn(dim_env, dim_env, |e1, e2| {
                (0..dim_sys).fold(czero(), |acc, s| {
                    acc + self[(s * dim_env + e1, s * dim_env + e2)]
                })
            }),
        };
        out.check_finite("partial_trace")?;
        Ok(out)
    }

    /// Column-stacked vectorization: entry `(r, c)` lands at `c * rows + r`.
    pub fn vec_cols(&self) -> Vec<Cx<T>> {
        let mut v = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                v.push(self[(r, c)]);
            }
        }
        v
    }

    /// Inverse of [`CMatrix::vec_cols`] for square operators.
    pub fn from_vec_cols(dim: usize, v: &[Cx<T>]) -> Self {
        assert_eq!(v.len(), dim * dim, "unvec length mismatch");
        Self::from_fn(dim, dim, |r, c| v[c * dim + r])
    }
}

impl<T: Scalar> Index<(usize, usize)> for CMatrix<T> {
    type Output = Cx<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Cx<T> {
        &self.data[self.idx(i, j)]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<T> {
        let k = self.idx(i, j);
        &mut self.data[k]
    }
}

impl<T: Scalar> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn mul(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        self.matmul(rhs)
    }
}

impl<T: Scalar> Add for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn add(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a + *b)
                .collect(),
        }
    }
}

impl<T: Scalar> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: &CMatrix<T>) -> CMatrix<T> {
        assert_eq!(self.rows, rhs.rows);
        assert_eq!(self.cols, rhs.cols);
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

impl<T: Scalar> fmt::Debug for CMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4e}{:+.4e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr<T> {
    rows: usize,
    cols: usize,
    data: Vec<[T; 2]>,
}

impl<T: Scalar + Serialize> Serialize for CMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = MatrixRepr {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| [z.re, z.im]).collect(),
        };
        repr.serialize(serializer)
    }
}

impl<'de, T: Scalar + Deserialize<'de>> Deserialize<'de> for CMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::<T>::deserialize(deserializer)?;
        let data = repr.data.iter().map(|&[re, im]| Cx::new(re, im)).collect();
        CMatrix::new(repr.rows, repr.cols, data).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cre;

    type M = CMatrix<f64>;

    fn c(re: f64, im: f64) -> Cx<f64> {
        Cx::new(re, im)
    }

    #[test]
    fn kron_identities() {
        let i2 = M::identity(2);
        let i4 = i2.kron(&i2);
        assert_eq!(i4, M::identity(4));

        let d = M::diag(&[c(3.0, 0.0), c(5.0, 0.0)]);
        let dk = d.kron(&i2);
        let expect = M::diag(&[c(3.0, 0.0), c(3.0, 0.0), c(5.0, 0.0), c(5.0, 0.0)]);
        assert!(dk.dist_fro(&expect) == 0.0);
    }

    #[test]
    fn kron_acts_on_product_vectors() {
        // (X (x) Y)(u (x) v) = Xu (x) Yv on fixed vectors.
        let x = M::from_fn(2, 2, |i, j| c((i + 2 * j) as f64, 0.3 * (i as f64 - 1.0)));
        let y = M::from_fn(3, 3, |i, j| c(0.2 * (i * j) as f64 + 1.0, 0.1 * j as f64));
        let u = vec![c(0.3, 0.1), c(-0.4, 0.7)];
        let v = vec![c(1.0, 0.0), c(0.2, -0.5), c(0.0, 0.9)];

        let mut uv = Vec::new();
        for a in &u {
            for b in &v {
                uv.push(*a * *b);
            }
        }
        let lhs = x.kron(&y).matvec(&uv);

        let xu = x.matvec(&u);
        let yv = y.matvec(&v);
        let mut rhs = Vec::new();
        for a in &xu {
            for b in &yv {
                rhs.push(*a * *b);
            }
        }
        let err: f64 = lhs
            .iter()
            .zip(&rhs)
            .map(|(a, b)| (*a - *b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn partial_trace_of_product_state() {
        // tr_E(rho (x) sigma) = rho * tr(sigma)
        let rho = M::from_fn(2, 2, |i, j| c(0.25 + (i * 2 + j) as f64 * 0.1, 0.0));
        let sigma = M::from_fn(3, 3, |i, j| c((i + j) as f64 * 0.05 + 0.2, 0.01));
        let joint = rho.kron(&sigma);
        let red = joint.partial_trace(2, 3, Keep::System).unwrap();
        let expect = rho.scale(sigma.trace());
        assert!(red.dist_fro(&expect) < 1e-12);

        let red_e = joint.partial_trace(2, 3, Keep::Environment).unwrap();
        let expect_e = sigma.scale(rho.trace());
        assert!(red_e.dist_fro(&expect_e) < 1e-12);
    }

    #[test]
    fn partial_trace_identity_and_bell() {
        let i4 = M::identity(4);
        let half = i4.partial_trace(2, 2, Keep::System).unwrap().scale_re(0.5);
        assert!(half.dist_fro(&M::identity(2)) < 1e-15);

        // |Phi+> = (|00> + |11>)/sqrt(2); reduced state is I/2.
        // Expanded 4x4 projector: entries 1/2 at (0,0),(0,3),(3,0),(3,3).
        let mut bell = M::zeros(4, 4);
        bell[(0, 0)] = c(0.5, 0.0);
        bell[(0, 3)] = c(0.5, 0.0);
        bell[(3, 0)] = c(0.5, 0.0);
        bell[(3, 3)] = c(0.5, 0.0);
        let red = bell.partial_trace(2, 2, Keep::System).unwrap();
        assert!(red.dist_fro(&M::identity(2).scale_re(0.5)) < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_bad_dims() {
        let m = M::identity(6);
        assert!(m.partial_trace(2, 2, Keep::System).is_err());
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let m = M::from_fn(6, 6, |i, j| c(0.1 * (i as f64) - 0.07 * (j as f64), 0.03 * ((i * j) as f64)));
        let r = m.partial_trace(2, 3, Keep::System).unwrap();
        assert!((r.trace() - m.trace()).norm() < 1e-12);
        let r = m.partial_trace(3, 2, Keep::Environment).unwrap();
        assert!((r.trace() - m.trace()).norm() < 1e-12);
    }

    #[test]
    fn vec_cols_round_trip_and_identity() {
        let m = M::from_fn(3, 3, |i, j| c(i as f64, j as f64));
        let v = m.vec_cols();
        // column stacking: entry (r, c) at c*rows + r
        assert_eq!(v[0], m[(0, 0)]);
        assert_eq!(v[1], m[(1, 0)]);
        assert_eq!(v[3], m[(0, 1)]);
        let back = M::from_vec_cols(3, &v);
        assert_eq!(back, m);
    }

    #[test]
    fn serde_round_trip_is_bit_exact() {
        let m = M::from_fn(2, 3, |i, j| {
            c(
                (1.0 + i as f64) / 3.0 * 1e-7,
                -(7.0 + j as f64) / 9.0 * 1e12,
            )
        });
        let s = serde_json::to_string(&m).unwrap();
        let back: M = serde_json::from_str(&s).unwrap();
        assert_eq!(back.rows(), 2);
        assert_eq!(back.cols(), 3);
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(back[(i, j)].re.to_bits(), m[(i, j)].re.to_bits());
                assert_eq!(back[(i, j)].im.to_bits(), m[(i, j)].im.to_bits());
            }
        }
    }

    #[test]
    fn serde_rejects_wrong_length() {
        let s = r#"{"rows": 2, "cols": 2, "data": [[1.0, 0.0]]}"#;
        assert!(serde_json::from_str::<M>(s).is_err());
    }

    #[test]
    fn constructor_rejects_non_finite() {
        let bad = vec![c(f64::NAN, 0.0)];
        assert!(M::new(1, 1, bad).is_err());
    }

    #[test]
    fn hermitize_and_deviation() {
        let m = M::from_fn(2, 2, |i, j| c((i + j) as f64, (i as f64) - (j as f64)));
        let h = m.hermitize();
        assert!(h.herm_deviation() < 1e-15);
        assert!(h.require_hermitian(1e-10).is_ok());
    }

    #[test]
    fn generic_scalar_smoke_f32() {
        let m: CMatrix<f32> = CMatrix::identity(3).scale(cre(2.0f32));
        let p = m.matmul(&m);
        assert!((p.trace().re - 12.0).abs() < 1e-5);
    }
}
