use itertools::Itertools;
use num_complex::Complex;
use num_traits::{One, Zero};

use super::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Largest dimension for the permutation expansion (8! = 40320 terms).
pub const LEIBNIZ_MAX_DIM: usize = 8;

/// A bijection on `{0, .., n-1}` together with its sign.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    images: Vec<usize>,
    sign: i8,
}

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &k in &images {
            if k >= n || seen[k] {
                return Err(Error::Precondition(format!("{images:?} is not a permutation")));
            }
            seen[k] = true;
        }
        let sign = cycle_sign(&images);
        Ok(Self { images, sign })
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// All permutations of `n` symbols in lexicographic order.
    pub fn all(n: usize) -> impl Iterator<Item = Permutation> {
        (0..n).permutations(n).map(|images| {
            let sign = cycle_sign(&images);
            Permutation { images, sign }
        })
    }
}

// (-1)^(n - #cycles)
fn cycle_sign(images: &[usize]) -> i8 {
    let n = images.len();
    let mut visited = vec![false; n];
    let mut cycles = 0;
    for start in 0..n {
        if visited[start] {
            continue;
        }
        cycles += 1;
        let mut k = start;
        while !visited[k] {
            visited[k] = true;
            k = images[k];
        }
    }
    if (n - cycles).is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// Determinant by the full permutation expansion, summed in lexicographic
/// permutation order.
pub fn leibniz_det<T: Real>(m: &DenseMatrix<T>) -> Result<Complex<T>> {
    let n = m.dim();
    if n > LEIBNIZ_MAX_DIM {
        return Err(Error::DimensionTooLarge {
            n,
            max: LEIBNIZ_MAX_DIM,
        });
    }
    let mut sum = Complex::zero();
    for p in Permutation::all(n) {
        let term = p
            .images()
            .iter()
            .enumerate()
            .fold(Complex::one(), |acc: Complex<T>, (i, &j)| acc * m.get(i, j));
        if p.sign() > 0 {
            sum = sum + term;
        } else {
            sum = sum - term;
        }
    }
    Ok(sum)
}

/// Determinant by Gaussian elimination with partial pivoting. Returns zero
/// for exactly singular input.
pub fn lu_det<T: Real>(m: &DenseMatrix<T>) -> Complex<T> {
    let n = m.dim();
    let mut a: Vec<Complex<T>> = m.entries().to_vec();
    let mut det = Complex::<T>::one();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                a[r * n + col]
                    .norm()
                    .partial_cmp(&a[s * n + col].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        let p = a[pivot * n + col];
        if p.is_zero() {
            return Complex::zero();
        }
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
            }
            det = -det;
        }
        det = det * p;
        for r in col + 1..n {
            let factor = a[r * n + col] / p;
            if factor.is_zero() {
                continue;
            }
            for k in col..n {
                let v = a[col * n + k];
                a[r * n + k] = a[r * n + k] - factor * v;
            }
        }
    }
    det
}

/// `(-1)^(i+j)` times the determinant of `m` with row `i` and column `j`
/// deleted (0-based indices). The cofactor of a 1x1 matrix is 1.
pub fn cofactor<T: Real>(m: &DenseMatrix<T>, i: usize, j: usize) -> Result<Complex<T>> {
    let n = m.dim();
    if i >= n || j >= n {
        return Err(Error::IndexOutOfRange { i, j, n });
    }
    let minor = match m.minor_matrix(i, j) {
        Some(sub) => lu_det(&sub),
        None => Complex::one(),
    };
    Ok(if (i + j).is_multiple_of(2) { minor } else { -minor })
}

/// Transposed cofactor matrix.
pub fn adjugate<T: Real>(m: &DenseMatrix<T>) -> DenseMatrix<T> {
    DenseMatrix::from_fn(m.dim(), |i, j| cofactor(m, j, i).expect("indices in range"))
}

/// `adj(M) / det M`, failing when `|det M| <= 1e-12 * max|M|^n`.
pub fn adjugate_inverse<T: Real>(m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    adjugate_inverse_with_tol(m, T::tol(1e-12))
}

pub fn adjugate_inverse_with_tol<T: Real>(m: &DenseMatrix<T>, rel_tol: T) -> Result<DenseMatrix<T>> {
    let det = lu_det(m);
    let threshold = rel_tol * m.max_abs().powi(m.dim() as i32);
    if det.norm() <= threshold {
        return Err(Error::Singular {
            det_abs: det.norm().to_f64_lossy(),
        });
    }
    let inv_det = det.inv();
    Ok(adjugate(m).scale(inv_det))
}

/// Inverse by Gauss-Jordan elimination with partial pivoting; the
/// elimination-side partner of [`adjugate_inverse`].
pub fn gauss_jordan_inverse<T: Real>(m: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = m.dim();
    let w = 2 * n;
    let mut a = vec![Complex::<T>::zero(); n * w];
    for i in 0..n {
        for j in 0..n {
            a[i * w + j] = m.get(i, j);
        }
        a[i * w + n + i] = Complex::one();
    }
    let threshold = T::epsilon() * m.max_abs() * T::lit(n as f64);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                a[r * w + col]
                    .norm()
                    .partial_cmp(&a[s * w + col].norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(col);
        if a[pivot * w + col].norm() <= threshold {
            return Err(Error::Singular {
                det_abs: a[pivot * w + col].norm().to_f64_lossy(),
            });
        }
        if pivot != col {
            for k in 0..w {
                a.swap(col * w + k, pivot * w + k);
            }
        }
        let p = a[col * w + col].inv();
        for k in 0..w {
            a[col * w + k] = a[col * w + k] * p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r * w + col];
            if factor.is_zero() {
                continue;
            }
            for k in 0..w {
                let v = a[col * w + k];
                a[r * w + k] = a[r * w + k] - factor * v;
            }
        }
    }
    Ok(DenseMatrix::from_fn(n, |i, j| a[i * w + n + j]))
}
