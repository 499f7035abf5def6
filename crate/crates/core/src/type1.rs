//! Type 1 matrix power functions `W(x)_ij = s · a_ij |x|^{γ_ij}`.
//!
//! Exponents are exact rationals, so the midpoint condition
//! `γ_ij = (γ_ii + γ_jj)/2` is decided by exact equality.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{
    cofactor, is_positive_definite, lu_det, sym_eigen, DenseMatrix, PdVerdict, SelfAdjointMatrix, DEFAULT_HERMITIAN_TOL,
};
use crate::report::{A2Report, Finding, Verdict};
use crate::scalar::{logspace, rational_to, Rational, Real};
use crate::scalar_power::{scalar_a2_constant, scalar_is_a2};

/// Relative margin used by the positive-definiteness test of coefficient
/// matrices.
pub const DEFAULT_PD_TOL: f64 = 1e-12;

/// Number of points per sign in the witness scan over `±[1e-8, 1e8]`.
pub const WITNESS_SCAN_POINTS: usize = 65;

/// Symbolic matrix function with entries `global_scale · coeff_ij · |x|^{exponents_ij}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicPowerMatrix<T> {
    coeff: DenseMatrix<T>,
    exponents: Vec<Rational>,
    global_scale: T,
}

/// Midpoint value `(γ_ii + γ_jj)/2`.
pub fn midpoint(gii: Rational, gjj: Rational) -> Rational {
    (gii + gjj) / Rational::from_integer(2)
}

impl<T: Real> SymbolicPowerMatrix<T> {
    /// Fills the full exponent matrix from its diagonal by the midpoint rule.
    pub fn build_type1(coeff: DenseMatrix<T>, diag_exponents: &[Rational]) -> Result<Self> {
        let n = coeff.dim();
        if diag_exponents.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: diag_exponents.len(),
            });
        }
        let mut exponents = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                exponents.push(midpoint(diag_exponents[i], diag_exponents[j]));
            }
        }
        Ok(Self {
            coeff,
            exponents,
            global_scale: T::one(),
        })
    }

    /// Stores a full exponent matrix verbatim; the midpoint condition is not
    /// assumed.
    pub fn build_type1_raw(coeff: DenseMatrix<T>, exponents: &[Vec<Rational>]) -> Result<Self> {
        let n = coeff.dim();
        if exponents.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: exponents.len(),
            });
        }
        let mut flat = Vec::with_capacity(n * n);
        for row in exponents {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Ok(Self {
            coeff,
            exponents: flat,
            global_scale: T::one(),
        })
    }

    /// The 1x1 weight `a|x|^γ`.
    pub fn scalar(a: T, gamma: Rational) -> Self {
        Self {
            coeff: DenseMatrix::from_fn(1, |_, _| Complex::new(a, T::zero())),
            exponents: vec![gamma],
            global_scale: T::one(),
        }
    }

    pub fn dim(&self) -> usize {
        self.coeff.dim()
    }

    pub fn coeff(&self) -> &DenseMatrix<T> {
        &self.coeff
    }

    pub fn exponent(&self, i: usize, j: usize) -> Rational {
        self.exponents[i * self.dim() + j]
    }

    pub fn exponent_rows(&self) -> Vec<Vec<Rational>> {
        self.exponents.chunks(self.dim()).map(|r| r.to_vec()).collect()
    }

    pub fn diagonal_exponents(&self) -> Vec<Rational> {
        (0..self.dim()).map(|i| self.exponent(i, i)).collect()
    }

    pub fn global_scale(&self) -> T {
        self.global_scale
    }

    /// `global_scale · coeff`
    pub fn effective_coeff(&self) -> DenseMatrix<T> {
        self.coeff.scale_real(self.global_scale)
    }

    /// `c · W` for `c > 0`.
    pub fn scaled(&self, c: T) -> Self {
        Self {
            global_scale: self.global_scale * c,
            ..self.clone()
        }
    }

    pub fn evaluate(&self, x: T) -> Result<DenseMatrix<T>> {
        if x.is_zero() {
            return Err(Error::EvaluationAtOrigin);
        }
        let ax = x.abs();
        Ok(DenseMatrix::from_fn(self.dim(), |i, j| {
            let e = self.exponent(i, j);
            let p = if e.is_zero() { T::one() } else { ax.powf(rational_to(e)) };
            self.coeff.get(i, j) * (self.global_scale * p)
        }))
    }

    /// Rewrites the exponent of every exactly-zero coefficient to its midpoint
    /// value; such entries vanish identically, so their exponent is arbitrary.
    pub fn normalized(&self) -> Self {
        let n = self.dim();
        let mut out = self.clone();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.coeff.get(i, j).is_zero() {
                    out.exponents[i * n + j] = midpoint(self.exponent(i, i), self.exponent(j, j));
                }
            }
        }
        out
    }

    fn midpoint_violations(&self) -> Vec<Finding> {
        let n = self.dim();
        let mut found = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let expected = midpoint(self.exponent(i, i), self.exponent(j, j));
                let actual = self.exponent(i, j);
                if actual != expected {
                    found.push(Finding::MidpointViolated {
                        i,
                        j,
                        coordinate: None,
                        expected,
                        actual,
                    });
                }
            }
        }
        found
    }

    fn require_midpoint(&self) -> Result<Self> {
        let w = self.normalized();
        match w.midpoint_violations().first() {
            Some(Finding::MidpointViolated { i, j, .. }) => Err(Error::MidpointViolated { i: *i, j: *j }),
            _ => Ok(w),
        }
    }

    /// Scans `±logspace(1e-8, 1e8, 65)` for a point where the self-adjoint
    /// part of `W(x)` has an eigenvalue below `-1e-12 ||W(x)||`.
    pub fn find_negative_witness(&self) -> Option<T> {
        let grid = logspace(T::lit(1e-8), T::lit(1e8), WITNESS_SCAN_POINTS);
        for &x in &grid {
            for x in [x, -x] {
                let Ok(w) = self.evaluate(x) else { continue };
                let h = SelfAdjointMatrix::symmetrized(&w);
                let Ok(e) = sym_eigen(&h) else { continue };
                let norm = e.min().abs().max(e.max().abs());
                if e.min() < -T::tol(1e-12) * norm {
                    return Some(x);
                }
            }
        }
        None
    }

    /// Positive definiteness almost everywhere: the coefficient matrix is
    /// self-adjoint and positive definite and the exponents satisfy the
    /// midpoint condition exactly.
    pub fn check_positive_definite_ae(&self) -> A2Report<T> {
        let w = self.normalized();
        let mut reasons = Vec::new();
        let mut notes = Vec::new();

        let deviation = w.coeff.hermitian_deviation();
        let hermitian = deviation <= T::tol(DEFAULT_HERMITIAN_TOL);
        if !hermitian {
            reasons.push(Finding::CoefficientNotSelfAdjoint {
                deviation: deviation.to_f64_lossy(),
            });
        }
        let midpoint_reasons = w.midpoint_violations();
        let midpoint_ok = midpoint_reasons.is_empty();
        reasons.extend(midpoint_reasons);

        let h = SelfAdjointMatrix::symmetrized(&w.effective_coeff());
        let mut marginal = false;
        match is_positive_definite(&h, T::tol(DEFAULT_PD_TOL)) {
            Ok(test) => match test.verdict {
                PdVerdict::Positive => {}
                PdVerdict::NotPositive => {
                    let order = test.failed_minor.unwrap_or(1);
                    reasons.push(Finding::LeadingMinorNotPositive {
                        order,
                        value: test.minors[order - 1].to_f64_lossy(),
                    });
                }
                PdVerdict::Marginal => {
                    marginal = true;
                    reasons.push(Finding::MarginalDefiniteness {
                        min_eigenvalue: test.min_eigenvalue.to_f64_lossy(),
                    });
                }
            },
            Err(e) => {
                marginal = true;
                notes.push(format!("positive-definiteness test failed numerically: {e}"));
            }
        }

        let structural_failure = !hermitian
            || !midpoint_ok
            || reasons
                .iter()
                .any(|r| matches!(r, Finding::LeadingMinorNotPositive { .. }));
        let mut verdict = if structural_failure {
            Verdict::NotPositiveDefiniteAe
        } else if marginal {
            Verdict::Marginal
        } else {
            Verdict::PositiveDefiniteAe
        };
        let mut witness = None;
        if verdict != Verdict::PositiveDefiniteAe {
            witness = w.find_negative_witness();
            if witness.is_some() && verdict == Verdict::Marginal {
                verdict = Verdict::NotPositiveDefiniteAe;
            }
        }
        A2Report {
            verdict,
            reasons,
            witness,
            notes,
        }
    }

    /// A₂ membership: positive definite a.e. and every diagonal exponent in
    /// `(-1, 1)`.
    pub fn check_a2(&self) -> A2Report<T> {
        let mut report = self.check_positive_definite_ae();
        let mut range = Vec::new();
        let mut non_integrable = false;
        for (i, g) in self.diagonal_exponents().into_iter().enumerate() {
            if !scalar_is_a2(g) {
                non_integrable |= g <= -Rational::one();
                range.push(Finding::DiagonalExponentOutOfRange {
                    i,
                    coordinate: None,
                    exponent: g,
                    lower: -Rational::one(),
                    upper: Rational::one(),
                });
            }
        }
        if report.verdict == Verdict::PositiveDefiniteAe {
            report.verdict = if range.is_empty() {
                Verdict::A2
            } else if non_integrable {
                Verdict::NotLocallyIntegrable
            } else {
                Verdict::NotA2
            };
        }
        report.reasons.extend(range);
        report
    }

    /// `(det A · s^n, Σ_k γ_kk)`, so that `det W(x) = coefficient · |x|^exponent`.
    pub fn symbolic_det(&self) -> Result<(Complex<T>, Rational)> {
        let w = self.require_midpoint()?;
        let n = w.dim();
        let det = lu_det(&w.coeff) * w.global_scale.powi(n as i32);
        let exponent = w.diagonal_exponents().into_iter().sum();
        Ok((det, exponent))
    }

    /// Determinant of `W(x)` with row `i` and column `j` removed, as
    /// `(det A_ij · s^(n-1), Σ_k γ_kk - γ_ij)`.
    pub fn symbolic_minor_det(&self, i: usize, j: usize) -> Result<(Complex<T>, Rational)> {
        let n = self.dim();
        if i >= n || j >= n {
            return Err(Error::IndexOutOfRange { i, j, n });
        }
        let w = self.require_midpoint()?;
        let minor = match w.coeff.minor_matrix(i, j) {
            Some(sub) => lu_det(&sub),
            None => Complex::new(T::one(), T::zero()),
        };
        let coefficient = minor * w.global_scale.powi(n as i32 - 1);
        let total: Rational = w.diagonal_exponents().into_iter().sum();
        Ok((coefficient, total - w.exponent(i, j)))
    }

    /// Closed-form inverse: coefficient `(i, j)` is the cofactor `c_ji`,
    /// exponent `(i, j)` is `-γ_ij`, and the global scale becomes
    /// `1 / (s · det A)`.
    pub fn symbolic_inverse(&self) -> Result<Self> {
        let report = self.check_positive_definite_ae();
        if report.verdict != Verdict::PositiveDefiniteAe {
            return Err(Error::Precondition(format!(
                "inverse requires a positive definite weight, verdict was {}",
                report.verdict
            )));
        }
        let w = self.normalized();
        let n = w.dim();
        let det = lu_det(&w.coeff);
        let threshold = T::tol(1e-12) * w.coeff.max_abs().powi(n as i32);
        if det.norm() <= threshold {
            return Err(Error::Singular {
                det_abs: det.norm().to_f64_lossy(),
            });
        }
        let coeff = DenseMatrix::from_fn(n, |i, j| cofactor(&w.coeff, j, i).expect("in range"));
        let exponents = w.exponents.iter().map(|&e| -e).collect();
        Ok(Self {
            coeff,
            exponents,
            global_scale: T::one() / (w.global_scale * det.re),
        })
    }

    /// Interval-uniform bound on `Tr(⟨W⟩_I ⟨W⁻¹⟩_I)`:
    /// `max_ij |a_ij c_ij| / |det A| · Σ_ij [|x|^{γ_ij}]_{A₂}`.
    pub fn a2_upper_bound(&self) -> Result<T> {
        let report = self.check_a2();
        if report.verdict != Verdict::A2 {
            return Err(Error::Precondition(format!(
                "upper bound requires an A2 weight, verdict was {}",
                report.verdict
            )));
        }
        let w = self.normalized();
        let n = w.dim();
        let det = lu_det(&w.coeff).norm();
        let mut sup = T::zero();
        let mut constants: BTreeMap<Rational, T> = BTreeMap::new();
        let mut sum = T::zero();
        for i in 0..n {
            for j in 0..n {
                let c = cofactor(&w.coeff, i, j)?;
                sup = sup.max((w.coeff.get(i, j) * c).norm() / det);
                let g = w.exponent(i, j);
                let k = match constants.get(&g) {
                    Some(&k) => k,
                    None => {
                        let k = scalar_a2_constant::<T>(g)?;
                        constants.insert(g, k);
                        k
                    }
                };
                sum = sum + k;
            }
        }
        Ok(sup * sum)
    }
}
