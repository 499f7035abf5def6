//! Dense complex matrix kernel for small dimensions.
//!
//! Everything here works on `n x n` matrices with `n <= 8`. Determinants are
//! available two ways (permutation expansion and pivoted elimination) so one
//! can serve as an oracle for the other.

mod det;
mod eigen;

pub use det::{
    adjugate, adjugate_inverse, adjugate_inverse_with_tol, cofactor, gauss_jordan_inverse, leibniz_det, lu_det,
    Permutation, LEIBNIZ_MAX_DIM,
};
pub use eigen::{
    is_positive_definite, operator_norm, sqrt_psd, sym_eigen, sym_eigen_with_sweeps, Eigen, PdTest, PdVerdict,
    DEFAULT_MAX_SWEEPS,
};

use std::ops::{Deref, Index, Mul};

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest dimension the kernel accepts.
pub const MAX_DIM: usize = 8;

/// Relative tolerance for accepting a matrix as self-adjoint.
pub const DEFAULT_HERMITIAN_TOL: f64 = 1e-12;

/// Square complex matrix stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DenseMatrix<T> {
    /// Builds a matrix from row-major entries, rejecting non-finite values.
    pub fn new(n: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if n == 0 || data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: data.len(),
            });
        }
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge { n, max: MAX_DIM });
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(n, data)
    }

    pub fn from_real_rows(rows: &[Vec<T>]) -> Result<Self> {
        let rows: Vec<Vec<Complex<T>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex::new(x, T::zero())).collect())
            .collect();
        Self::from_rows(&rows)
    }

    /// Builds a matrix entry by entry. Entries are assumed finite.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_fn(n, |_, _| Complex::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| {
            if i == j {
                Complex::new(T::one(), T::zero())
            } else {
                Complex::zero()
            }
        })
    }

    pub fn diagonal(values: &[T]) -> Self {
        Self::from_fn(values.len(), |i, j| {
            if i == j {
                Complex::new(values[i], T::zero())
            } else {
                Complex::zero()
            }
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: Complex<T>) {
        self.data[i * self.n + j] = value;
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "matmul dimension mismatch");
        let n = self.n;
        Self::from_fn(n, |i, j| {
            (0..n).fold(Complex::zero(), |acc, k| acc + self.get(i, k) * other.get(k, j))
        })
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: T) -> Self {
        self.scale(Complex::new(factor, T::zero()))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::from_fn(self.n, |i, j| self.get(i, j) - other.get(i, j))
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, z| m.max(z.norm()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.n).fold(Complex::zero(), |acc, i| acc + self.get(i, i))
    }

    /// Matrix with row `i` and column `j` removed. A 1x1 input has no minor.
    pub fn minor_matrix(&self, i: usize, j: usize) -> Option<Self> {
        if self.n < 2 {
            return None;
        }
        let rows: Vec<usize> = (0..self.n).filter(|&r| r != i).collect();
        let cols: Vec<usize> = (0..self.n).filter(|&c| c != j).collect();
        Some(Self::from_fn(self.n - 1, |r, c| self.get(rows[r], cols[c])))
    }

    /// Top-left `k x k` block.
    pub fn leading(&self, k: usize) -> Self {
        Self::from_fn(k, |i, j| self.get(i, j))
    }

    /// `max |M - M*| / max |M|`, zero for the zero matrix.
    pub fn hermitian_deviation(&self) -> T {
        let scale = self.max_abs();
        if scale.is_zero() {
            return T::zero();
        }
        let mut dev = T::zero();
        for i in 0..self.n {
            for j in i..self.n {
                dev = dev.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        dev / scale
    }

    /// Largest entrywise distance to another matrix.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).norm()))
    }
}

impl<T: Real> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.n + j]
    }
}

impl<T: Real> Mul for &DenseMatrix<T> {
    type Output = DenseMatrix<T>;

    fn mul(self, rhs: Self) -> DenseMatrix<T> {
        self.matmul(rhs)
    }
}

/// A matrix known to equal its conjugate transpose.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfAdjointMatrix<T>(DenseMatrix<T>);

impl<T: Real> SelfAdjointMatrix<T> {
    /// Accepts `m` if its relative Hermitian deviation is within `tol`, then
    /// stores the exact symmetrization `(M + M*)/2`.
    pub fn new(m: DenseMatrix<T>, tol: T) -> Result<Self> {
        let deviation = m.hermitian_deviation();
        if deviation > tol {
            return Err(Error::NotSelfAdjoint {
                deviation: deviation.to_f64_lossy(),
            });
        }
        Ok(Self::symmetrized(&m))
    }

    /// `(M + M*)/2` without any tolerance check.
    pub fn symmetrized(m: &DenseMatrix<T>) -> Self {
        let half = T::lit(0.5);
        let mut out = DenseMatrix::from_fn(m.dim(), |i, j| (m.get(i, j) + m.get(j, i).conj()).scale(half));
        for i in 0..m.dim() {
            let d = out.get(i, i).re;
            out.set(i, i, Complex::new(d, T::zero()));
        }
        Self(out)
    }

    pub fn identity(n: usize) -> Self {
        Self(DenseMatrix::identity(n))
    }

    pub fn diagonal(values: &[T]) -> Self {
        Self(DenseMatrix::diagonal(values))
    }

    pub fn as_matrix(&self) -> &DenseMatrix<T> {
        &self.0
    }

    pub fn into_matrix(self) -> DenseMatrix<T> {
        self.0
    }
}

impl<T> Deref for SelfAdjointMatrix<T> {
    type Target = DenseMatrix<T>;

    fn deref(&self) -> &DenseMatrix<T> {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_ragged() {
        assert_eq!(
            DenseMatrix::from_real_rows(&[vec![1.0, f64::NAN], vec![0.0, 1.0]]),
            Err(Error::NonFinite)
        );
        assert!(DenseMatrix::from_real_rows(&[vec![1.0, 2.0], vec![0.0]]).is_err());
        assert!(DenseMatrix::<f64>::new(9, vec![Complex::zero(); 81]).is_err());
    }

    #[test]
    fn minor_and_leading_blocks() {
        let a = m(&[&[4.0, 1.0, 2.0], &[1.0, 2.0, -1.0], &[2.0, -1.0, 3.0]]);
        assert_eq!(a.minor_matrix(0, 0).unwrap(), m(&[&[2.0, -1.0], &[-1.0, 3.0]]));
        assert_eq!(a.leading(2), m(&[&[4.0, 1.0], &[1.0, 2.0]]));
        assert!(m(&[&[1.0]]).minor_matrix(0, 0).is_none());
    }

    #[test]
    fn self_adjoint_checks_tolerance() {
        let skew = m(&[&[1.0, 2.0], &[2.1, 1.0]]);
        assert!(matches!(
            SelfAdjointMatrix::new(skew.clone(), 1e-12),
            Err(Error::NotSelfAdjoint { .. })
        ));
        let h = SelfAdjointMatrix::new(skew, 0.1).unwrap();
        assert_eq!(h.get(0, 1), Complex::new(2.05, 0.0));
        assert_eq!(h.hermitian_deviation(), 0.0);
    }

    #[test]
    fn complex_hermitian_is_accepted() {
        let z = DenseMatrix::from_rows(&[
            vec![Complex::new(2.0, 0.0), Complex::new(1.0, -1.0)],
            vec![Complex::new(1.0, 1.0), Complex::new(3.0, 0.0)],
        ])
        .unwrap();
        assert!(SelfAdjointMatrix::new(z, 1e-12).is_ok());
    }
}
