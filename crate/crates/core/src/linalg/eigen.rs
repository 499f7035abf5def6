use num_complex::Complex;
use num_traits::Zero;

use super::{lu_det, DenseMatrix, SelfAdjointMatrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_MAX_SWEEPS: usize = 50;

/// Eigen-decomposition `H = V diag(values) V*` with ascending eigenvalues and
/// eigenvectors stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigen<T> {
    pub values: Vec<T>,
    pub vectors: DenseMatrix<T>,
}

impl<T: Real> Eigen<T> {
    pub fn min(&self) -> T {
        self.values[0]
    }

    pub fn max(&self) -> T {
        *self.values.last().expect("non-empty spectrum")
    }

    /// `V f(diag) V*`
    pub fn reconstruct_with(&self, f: impl Fn(T) -> T) -> SelfAdjointMatrix<T> {
        let n = self.values.len();
        let v = &self.vectors;
        let mapped: Vec<T> = self.values.iter().map(|&x| f(x)).collect();
        let m = DenseMatrix::from_fn(n, |i, j| {
            (0..n).fold(Complex::zero(), |acc, k| {
                acc + v.get(i, k) * v.get(j, k).conj() * mapped[k]
            })
        });
        SelfAdjointMatrix::symmetrized(&m)
    }
}

pub fn sym_eigen<T: Real>(h: &SelfAdjointMatrix<T>) -> Result<Eigen<T>> {
    sym_eigen_with_sweeps(h, DEFAULT_MAX_SWEEPS)
}

/// Cyclic complex Jacobi. Pairs are visited row by row (p < q) in a fixed
/// order. Each rotation first removes the phase of `h[p][q]` and then
/// applies the real symmetric Jacobi rotation.
pub fn sym_eigen_with_sweeps<T: Real>(h: &SelfAdjointMatrix<T>, max_sweeps: usize) -> Result<Eigen<T>> {
    let n = h.dim();
    let mut a = h.as_matrix().clone();
    let mut v = DenseMatrix::<T>::identity(n);
    let scale = a.frobenius();
    let threshold = T::epsilon() * scale;

    let mut converged = n == 1 || scale.is_zero();
    for _ in 0..max_sweeps {
        if converged {
            break;
        }
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let mut off = T::zero();
        for p in 0..n {
            for q in p + 1..n {
                off = off + a.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() > threshold {
            return Err(Error::NoConvergence { sweeps: max_sweeps });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a.get(i, i)
            .re
            .partial_cmp(&a.get(j, j).re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| a.get(k, k).re).collect();
    let vectors = DenseMatrix::from_fn(n, |i, j| v.get(i, order[j]));
    Ok(Eigen { values, vectors })
}

fn rotate<T: Real>(a: &mut DenseMatrix<T>, v: &mut DenseMatrix<T>, p: usize, q: usize) {
    let apq = a.get(p, q);
    let r = apq.norm();
    if r.is_zero() {
        return;
    }
    let n = a.dim();
    let d = (apq / r).conj();
    let (app, aqq) = (a.get(p, p).re, a.get(q, q).re);
    let theta = (aqq - app) / (T::lit(2.0) * r);
    let t = if theta.is_zero() {
        T::one()
    } else {
        theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    // G = diag(1, d) . [[c, s], [-s, c]] embedded in rows/cols p, q
    let g_pp = Complex::new(c, T::zero());
    let g_pq = Complex::new(s, T::zero());
    let g_qp = d * (-s);
    let g_qq = d * c;

    for k in 0..n {
        let (x, y) = (a.get(k, p), a.get(k, q));
        a.set(k, p, x * g_pp + y * g_qp);
        a.set(k, q, x * g_pq + y * g_qq);
    }
    for k in 0..n {
        let (x, y) = (a.get(p, k), a.get(q, k));
        a.set(p, k, g_pp.conj() * x + g_qp.conj() * y);
        a.set(q, k, g_pq.conj() * x + g_qq.conj() * y);
    }
    a.set(p, q, Complex::zero());
    a.set(q, p, Complex::zero());
    let (pp, qq) = (a.get(p, p).re, a.get(q, q).re);
    a.set(p, p, Complex::new(pp, T::zero()));
    a.set(q, q, Complex::new(qq, T::zero()));

    for k in 0..n {
        let (x, y) = (v.get(k, p), v.get(k, q));
        v.set(k, p, x * g_pp + y * g_qp);
        v.set(k, q, x * g_pq + y * g_qq);
    }
}

/// Principal square root of a positive semidefinite matrix. Eigenvalues in
/// `[-1e-12 ||H||, 0)` are clamped to zero.
pub fn sqrt_psd<T: Real>(h: &SelfAdjointMatrix<T>) -> Result<SelfAdjointMatrix<T>> {
    let eig = sym_eigen(h)?;
    let norm = eig.values.iter().fold(T::zero(), |m, x| m.max(x.abs()));
    let floor = -T::tol(1e-12) * norm;
    if eig.min() < floor {
        return Err(Error::NegativeEigenvalue {
            value: eig.min().to_f64_lossy(),
        });
    }
    Ok(eig.reconstruct_with(|x| x.max(T::zero()).sqrt()))
}

/// Largest singular value.
pub fn operator_norm<T: Real>(m: &DenseMatrix<T>) -> Result<T> {
    let gram = SelfAdjointMatrix::symmetrized(&m.adjoint().matmul(m));
    let eig = sym_eigen(&gram)?;
    Ok(eig.max().max(T::zero()).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdVerdict {
    Positive,
    NotPositive,
    /// The minor test and the eigenvalue test disagree, or the margin is
    /// within tolerance of zero.
    Marginal,
}

/// Outcome of the two-route positive-definiteness test.
#[derive(Clone, Debug)]
pub struct PdTest<T> {
    pub verdict: PdVerdict,
    /// Leading principal minors of orders 1..=n.
    pub minors: Vec<T>,
    pub min_eigenvalue: T,
    /// 1-based order of the first leading minor that is not clearly positive.
    pub failed_minor: Option<usize>,
}

/// Sylvester's criterion cross-checked against the smallest eigenvalue.
///
/// Minor `k` must exceed `tol * ||H||^k` and the smallest eigenvalue must
/// exceed `tol * ||H||`, where `||H||` is the largest entry modulus.
pub fn is_positive_definite<T: Real>(h: &SelfAdjointMatrix<T>, tol: T) -> Result<PdTest<T>> {
    let n = h.dim();
    let scale = h.max_abs();
    let minors: Vec<T> = (1..=n).map(|k| lu_det(&h.leading(k)).re).collect();
    let min_eigenvalue = sym_eigen(h)?.min();

    let failed_minor = minors
        .iter()
        .enumerate()
        .find(|(k, &m)| m <= tol * scale.powi(*k as i32 + 1))
        .map(|(k, _)| k + 1);
    let clearly_negative_minor = minors
        .iter()
        .enumerate()
        .any(|(k, &m)| m < -tol * scale.powi(k as i32 + 1));

    let verdict = if scale.is_zero() {
        PdVerdict::NotPositive
    } else {
        let eig_positive = min_eigenvalue > tol * scale;
        let eig_negative = min_eigenvalue < -tol * scale;
        match (failed_minor, eig_positive, eig_negative) {
            (None, true, _) => PdVerdict::Positive,
            (Some(_), _, true) if clearly_negative_minor => PdVerdict::NotPositive,
            _ => PdVerdict::Marginal,
        }
    };
    Ok(PdTest {
        verdict,
        minors,
        min_eigenvalue,
        failed_minor: if scale.is_zero() { Some(1) } else { failed_minor },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(rows: &[&[f64]]) -> SelfAdjointMatrix<f64> {
        let m = DenseMatrix::from_real_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        SelfAdjointMatrix::new(m, 1e-12).unwrap()
    }

    #[test]
    fn eigen_examples() {
        let e = sym_eigen(&h(&[&[2.0, 0.0], &[0.0, 5.0]])).unwrap();
        assert_eq!(e.values, vec![2.0, 5.0]);
        assert!(e.vectors.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);

        let e = sym_eigen(&h(&[&[5.0, 3.0], &[3.0, 2.0]])).unwrap();
        let s45 = 45f64.sqrt();
        assert!((e.values[0] - (7.0 - s45) / 2.0).abs() < 1e-12);
        assert!((e.values[1] - (7.0 + s45) / 2.0).abs() < 1e-12);

        let e = sym_eigen(&h(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-15 && (e.values[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_residual_complex() {
        let m = DenseMatrix::from_rows(&[
            vec![Complex::new(2.0, 0.0), Complex::new(1.0, -1.0), Complex::new(0.5, 0.25)],
            vec![Complex::new(1.0, 1.0), Complex::new(3.0, 0.0), Complex::new(0.0, -2.0)],
            vec![
                Complex::new(0.5, -0.25),
                Complex::new(0.0, 2.0),
                Complex::new(-1.0, 0.0),
            ],
        ])
        .unwrap();
        let hm = SelfAdjointMatrix::new(m.clone(), 1e-12).unwrap();
        let e = sym_eigen(&hm).unwrap();
        let lam = DenseMatrix::diagonal(&e.values);
        let resid = m.matmul(&e.vectors).max_abs_diff(&e.vectors.matmul(&lam));
        assert!(resid <= 1e-10 * m.max_abs());
        let vv = e.vectors.adjoint().matmul(&e.vectors);
        assert!(vv.max_abs_diff(&DenseMatrix::identity(3)) < 1e-10);
    }

    #[test]
    fn no_convergence_with_zero_sweeps() {
        let r = sym_eigen_with_sweeps(&h(&[&[1.0, 2.0], &[2.0, 1.0]]), 0);
        assert_eq!(r.unwrap_err(), Error::NoConvergence { sweeps: 0 });
    }

    #[test]
    fn sqrt_examples() {
        let id = SelfAdjointMatrix::<f64>::identity(3);
        assert!(sqrt_psd(&id).unwrap().max_abs_diff(&id) < 1e-15);
        let r = sqrt_psd(&h(&[&[4.0, 0.0], &[0.0, 9.0]])).unwrap();
        assert!(r.max_abs_diff(&DenseMatrix::diagonal(&[2.0, 3.0])) < 1e-14);
        let a = h(&[&[5.0, 3.0], &[3.0, 2.0]]);
        let r = sqrt_psd(&a).unwrap();
        assert!(r.matmul(&r).max_abs_diff(&a) < 1e-8 * 5.0);
        assert!(matches!(
            sqrt_psd(&h(&[&[1.0, 2.0], &[2.0, 1.0]])),
            Err(Error::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn operator_norm_examples() {
        assert!((operator_norm(&DenseMatrix::<f64>::identity(4)).unwrap() - 1.0).abs() < 1e-15);
        assert!((operator_norm(&DenseMatrix::<f64>::diagonal(&[2.0, -5.0])).unwrap() - 5.0).abs() < 1e-14);
        let n = operator_norm(h(&[&[5.0, 3.0], &[3.0, 2.0]]).as_matrix()).unwrap();
        assert!((n - (7.0 + 45f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn positive_definite_examples() {
        let t = is_positive_definite(&h(&[&[5.0, 3.0], &[3.0, 2.0]]), 1e-12).unwrap();
        assert_eq!(t.verdict, PdVerdict::Positive);
        assert!((t.minors[0] - 5.0).abs() < 1e-12 && (t.minors[1] - 1.0).abs() < 1e-12);

        let b = h(&[&[4.0, 1.0, 2.0], &[1.0, 2.0, -1.0], &[2.0, -1.0, 3.0]]);
        let t = is_positive_definite(&b, 1e-12).unwrap();
        assert_eq!(t.verdict, PdVerdict::Positive);
        for (got, want) in t.minors.iter().zip([4.0, 7.0, 5.0]) {
            assert!((got - want).abs() < 1e-12);
        }

        let t = is_positive_definite(&h(&[&[1.0, 2.0], &[2.0, 1.0]]), 1e-12).unwrap();
        assert_eq!(t.verdict, PdVerdict::NotPositive);
        assert_eq!(t.failed_minor, Some(2));
        assert!((t.minors[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn semidefinite_is_marginal() {
        let t = is_positive_definite(&h(&[&[1.0, 1.0], &[1.0, 1.0]]), 1e-12).unwrap();
        assert_eq!(t.verdict, PdVerdict::Marginal);
        let t = is_positive_definite(&h(&[&[0.0, 0.0], &[0.0, 0.0]]), 1e-12).unwrap();
        assert_eq!(t.verdict, PdVerdict::NotPositive);
    }
}
