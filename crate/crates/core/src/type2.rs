//! Type 2 matrix power functions `W(x) = U(x) diag(α_i |x|^{γ_i}) U*(x)`
//! for a closed set of unitary families.

use std::fmt;

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SelfAdjointMatrix};
use crate::quadrature::{integrate_scalar, QuadTol};
use crate::report::{A2Report, Finding, Verdict};
use crate::scalar::{rational_to, Rational, Real};
use crate::scalar_power::{scalar_is_a2, Interval};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnitaryFamily {
    Identity,
    /// `[[cos x, -sin x], [sin x, cos x]]`
    Rotation2d,
    /// `R_x(x) R_y(x) R_z(x)`
    Rotation3dEuler,
}

impl UnitaryFamily {
    pub fn as_str(&self) -> &'static str {
        match self {
            UnitaryFamily::Identity => "identity",
            UnitaryFamily::Rotation2d => "rotation2d",
            UnitaryFamily::Rotation3dEuler => "rotation3d_euler",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "identity" => Some(UnitaryFamily::Identity),
            "rotation2d" => Some(UnitaryFamily::Rotation2d),
            "rotation3d_euler" => Some(UnitaryFamily::Rotation3dEuler),
            _ => None,
        }
    }

    pub fn is_rotation(&self) -> bool {
        !matches!(self, UnitaryFamily::Identity)
    }
}

impl fmt::Display for UnitaryFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

fn real3<T: Real>(rows: [[T; 3]; 3]) -> DenseMatrix<T> {
    DenseMatrix::from_fn(3, |i, j| Complex::new(rows[i][j], T::zero()))
}

/// Rotation about the x-axis: `[[1, 0, 0], [0, c, s], [0, -s, c]]`.
pub fn rotation_x<T: Real>(theta: T) -> DenseMatrix<T> {
    let (s, c) = theta.sin_cos();
    let (o, l) = (T::zero(), T::one());
    real3([[l, o, o], [o, c, s], [o, -s, c]])
}

/// Rotation about the y-axis: `[[c, 0, -s], [0, 1, 0], [s, 0, c]]`.
pub fn rotation_y<T: Real>(theta: T) -> DenseMatrix<T> {
    let (s, c) = theta.sin_cos();
    let (o, l) = (T::zero(), T::one());
    real3([[c, o, -s], [o, l, o], [s, o, c]])
}

/// Rotation about the z-axis: `[[c, s, 0], [-s, c, 0], [0, 0, 1]]`.
pub fn rotation_z<T: Real>(theta: T) -> DenseMatrix<T> {
    let (s, c) = theta.sin_cos();
    let (o, l) = (T::zero(), T::one());
    real3([[c, s, o], [-s, c, o], [o, o, l]])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Type2Weight<T> {
    alphas: Vec<T>,
    gammas: Vec<Rational>,
    unitary: UnitaryFamily,
}

impl<T: Real> Type2Weight<T> {
    /// Positivity of the `α_i` is not required here; the decision
    /// procedures report it.
    pub fn new(alphas: Vec<T>, gammas: Vec<Rational>, unitary: UnitaryFamily) -> Result<Self> {
        let n = alphas.len();
        if n == 0 || gammas.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: gammas.len(),
            });
        }
        let required = match unitary {
            UnitaryFamily::Identity => n,
            UnitaryFamily::Rotation2d => 2,
            UnitaryFamily::Rotation3dEuler => 3,
        };
        if n != required {
            return Err(Error::DimensionMismatch {
                expected: required,
                found: n,
            });
        }
        if alphas.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            alphas,
            gammas,
            unitary,
        })
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[T] {
        &self.alphas
    }

    pub fn gammas(&self) -> &[Rational] {
        &self.gammas
    }

    pub fn unitary_family(&self) -> UnitaryFamily {
        self.unitary
    }

    pub fn unitary_at(&self, x: T) -> DenseMatrix<T> {
        match self.unitary {
            UnitaryFamily::Identity => DenseMatrix::identity(self.dim()),
            UnitaryFamily::Rotation2d => {
                let (s, c) = x.sin_cos();
                DenseMatrix::from_fn(2, |i, j| {
                    let v = match (i, j) {
                        (0, 0) | (1, 1) => c,
                        (0, 1) => -s,
                        _ => s,
                    };
                    Complex::new(v, T::zero())
                })
            }
            UnitaryFamily::Rotation3dEuler => rotation_x(x).matmul(&rotation_y(x)).matmul(&rotation_z(x)),
        }
    }

    /// Eigenvalues `α_k |x|^{γ_k}` of `W(x)`.
    pub fn eigenvalues_at(&self, x: T) -> Result<Vec<T>> {
        if x.is_zero() && self.gammas.iter().any(|g| *g < Rational::zero()) {
            return Err(Error::EvaluationAtOrigin);
        }
        let ax = x.abs();
        Ok(self
            .alphas
            .iter()
            .zip(&self.gammas)
            .map(|(&a, &g)| if g.is_zero() { a } else { a * ax.powf(rational_to(g)) })
            .collect())
    }

    pub fn evaluate(&self, x: T) -> Result<SelfAdjointMatrix<T>> {
        let lambda = self.eigenvalues_at(x)?;
        let u = self.unitary_at(x);
        let n = self.dim();
        let w = DenseMatrix::from_fn(n, |i, j| {
            (0..n).fold(Complex::zero(), |acc, k| {
                acc + u.get(i, k) * u.get(j, k).conj() * lambda[k]
            })
        });
        Ok(SelfAdjointMatrix::symmetrized(&w))
    }

    /// `W⁻¹` has eigen-data `(1/α_i, -γ_i)` with the same unitary.
    pub fn inverse(&self) -> Result<Self> {
        if self.alphas.iter().any(|&a| a <= T::zero()) {
            return Err(Error::Precondition(
                "inverse requires every alpha to be positive".into(),
            ));
        }
        Ok(Self {
            alphas: self.alphas.iter().map(|&a| T::one() / a).collect(),
            gammas: self.gammas.iter().map(|&g| -g).collect(),
            unitary: self.unitary,
        })
    }

    /// Smallest eigen-exponent; entries are dominated by `Σ α_k |x|^{γ_k}`.
    pub fn singular_exponent_bound(&self) -> Rational {
        self.gammas.iter().copied().min().expect("non-empty")
    }

    fn alpha_findings(&self) -> Vec<Finding> {
        self.alphas
            .iter()
            .enumerate()
            .filter(|(_, &a)| a <= T::zero())
            .map(|(i, &a)| Finding::NonPositiveEigenvalueCoefficient {
                i,
                alpha: a.to_f64_lossy(),
            })
            .collect()
    }

    /// Locally integrable and positive definite a.e. iff every `α_i > 0` and
    /// every `γ_i > -1`.
    pub fn check_local_integrability(&self) -> A2Report<T> {
        let mut reasons = self.alpha_findings();
        for (i, &g) in self.gammas.iter().enumerate() {
            if g <= -Rational::one() {
                reasons.push(Finding::ExponentNotIntegrable {
                    i,
                    exponent: g,
                    inverse: false,
                });
            }
        }
        let verdict = if reasons.is_empty() {
            Verdict::LocallyIntegrable
        } else {
            Verdict::NotLocallyIntegrable
        };
        A2Report::with_reasons(verdict, reasons)
    }

    /// Local integrability of both `W` and `W⁻¹`: `α_i > 0` and
    /// `-1 < γ_i < 1`. Passing does not decide membership.
    pub fn check_necessary_a2(&self) -> A2Report<T> {
        let mut reasons = self.alpha_findings();
        for (i, &g) in self.gammas.iter().enumerate() {
            if !scalar_is_a2(g) {
                reasons.push(Finding::ExponentNotIntegrable {
                    i,
                    exponent: g,
                    inverse: g >= Rational::one(),
                });
            }
        }
        let verdict = if reasons.is_empty() {
            Verdict::InconclusiveNecessaryPassed
        } else {
            Verdict::NotA2
        };
        A2Report::with_reasons(verdict, reasons)
    }

    /// Exact decision for the rotation families: A₂ iff all `γ_i` are equal,
    /// the common value lies in `(-1, 1)`, and every `α_i > 0`.
    pub fn decide_rotation_a2(&self) -> Result<A2Report<T>> {
        if !self.unitary.is_rotation() {
            return Err(Error::WrongUnitaryFamily);
        }
        let mut reasons = self.alpha_findings();
        let first = self.gammas[0];
        for (j, &g) in self.gammas.iter().enumerate().skip(1) {
            if g != first {
                reasons.push(Finding::UnequalRotationExponents {
                    i: 0,
                    j,
                    left: first,
                    right: g,
                });
            }
        }
        let mut non_integrable = !self.alpha_findings().is_empty();
        for (i, &g) in self.gammas.iter().enumerate() {
            if !scalar_is_a2(g) {
                non_integrable |= g <= -Rational::one();
                reasons.push(Finding::ExponentNotIntegrable {
                    i,
                    exponent: g,
                    inverse: g >= Rational::one(),
                });
            }
        }
        let verdict = if reasons.is_empty() {
            Verdict::A2
        } else if non_integrable {
            Verdict::NotLocallyIntegrable
        } else {
            Verdict::NotA2
        };
        let mut report = A2Report::with_reasons(verdict, reasons);
        if self.unitary == UnitaryFamily::Rotation3dEuler {
            report
                .notes
                .push("three-dimensional criterion read as gamma_1 = gamma_2 = gamma_3".into());
        }
        let all_alpha_equal = self.alphas.iter().all(|&a| a == self.alphas[0]);
        if verdict == Verdict::A2 && !all_alpha_equal {
            report.notes.push(
                "unequal alphas with equal exponents: accepted because \
                 min(alpha)|x|^gamma I <= W(x) <= max(alpha)|x|^gamma I, and the A2 \
                 property is stable under such two-sided comparison (implementation-derived extension)"
                    .into(),
            );
        }
        Ok(report)
    }

    pub fn diagonal_entry(&self, i: usize) -> Result<DiagonalEntry<'_, T>> {
        if i >= self.dim() {
            return Err(Error::IndexOutOfRange { i, j: i, n: self.dim() });
        }
        Ok(DiagonalEntry { weight: self, index: i })
    }
}

/// The scalar function `w_ii(x) = Σ_k α_k |x|^{γ_k} |u_ik(x)|²`.
#[derive(Clone, Copy, Debug)]
pub struct DiagonalEntry<'a, T> {
    weight: &'a Type2Weight<T>,
    index: usize,
}

impl<T: Real> DiagonalEntry<'_, T> {
    pub fn eval(&self, x: T) -> T {
        let Ok(lambda) = self.weight.eigenvalues_at(x) else {
            return T::infinity();
        };
        let u = self.weight.unitary_at(x);
        lambda
            .iter()
            .enumerate()
            .map(|(k, &l)| l * u.get(self.index, k).norm_sqr())
            .sum()
    }

    pub fn singular_exponent_bound(&self) -> Rational {
        self.weight.singular_exponent_bound()
    }
}

/// Averages of `w_11` and `1/w_11` over `I_n = [2πn, 2πn + π]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergenceRow<T> {
    pub n: u64,
    pub a: T,
    pub b: T,
    pub avg_w: T,
    pub avg_winv: T,
    pub product: T,
}

/// `I_n = [2πn, 2πn + π]`
pub fn divergence_interval<T: Real>(n: u64) -> Result<Interval<T>> {
    let a = T::lit(2.0) * T::PI() * T::lit(n as f64);
    Interval::new(a, a + T::PI())
}

/// Relative tolerance of the divergence quadratures.
pub const DIVERGENCE_REL_TOL: f64 = 1e-8;

/// For the rotation weight with `α = (1, 1)` and exponents `γ1 < γ2`,
/// computes `⟨w_11⟩_{I_n} ⟨1/w_11⟩_{I_n}` for each `n`.
pub fn divergence_experiment<T: Real>(
    gamma1: Rational,
    gamma2: Rational,
    n_values: &[u64],
) -> Result<Vec<DivergenceRow<T>>> {
    if !(-Rational::one() < gamma1 && gamma1 < gamma2 && gamma2 < Rational::one()) {
        return Err(Error::Precondition(format!(
            "need -1 < gamma1 < gamma2 < 1, got gamma1 = {gamma1}, gamma2 = {gamma2}"
        )));
    }
    if n_values.is_empty() || n_values[0] == 0 || n_values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition(
            "n values must be positive and strictly increasing".into(),
        ));
    }
    let weight = Type2Weight::new(
        vec![T::one(), T::one()],
        vec![gamma1, gamma2],
        UnitaryFamily::Rotation2d,
    )?;
    let w11 = weight.diagonal_entry(0)?;
    let tol = QuadTol {
        abs: T::zero(),
        rel: T::tol(DIVERGENCE_REL_TOL),
        max_panels: crate::estimator::DEFAULT_MAX_PANELS,
    };
    n_values
        .par_iter()
        .map(|&n| {
            let interval = divergence_interval::<T>(n)?;
            let (a, b) = (interval.a(), interval.b());
            let (int_w, _) = integrate_scalar(|x| w11.eval(x), a, b, &[], tol)?;
            let (int_winv, _) = integrate_scalar(|x| T::one() / w11.eval(x), a, b, &[], tol)?;
            let avg_w = int_w / interval.len();
            let avg_winv = int_winv / interval.len();
            Ok(DivergenceRow {
                n,
                a,
                b,
                avg_w,
                avg_winv,
                product: avg_w * avg_winv,
            })
        })
        .collect()
}

/// `points` integers log-spaced over `[n_min, n_max]`, deduplicated after
/// rounding.
pub fn log_spaced_indices(n_min: u64, n_max: u64, points: usize) -> Result<Vec<u64>> {
    if n_min == 0 || n_max < n_min || points == 0 {
        return Err(Error::Precondition("need 0 < n_min <= n_max and points > 0".into()));
    }
    let mut out: Vec<u64> = crate::scalar::logspace(n_min as f64, n_max as f64, points)
        .into_iter()
        .map(|x| x.round() as u64)
        .collect();
    out.dedup();
    Ok(out)
}

/// Least-squares slope of `ln(product)` against `ln(n)`.
pub fn loglog_slope<T: Real>(rows: &[DivergenceRow<T>]) -> Option<T> {
    if rows.len() < 2 {
        return None;
    }
    let xs: Vec<T> = rows.iter().map(|r| T::lit(r.n as f64).ln()).collect();
    let ys: Vec<T> = rows.iter().map(|r| r.product.ln()).collect();
    let m = T::lit(rows.len() as f64);
    let mx = xs.iter().copied().sum::<T>() / m;
    let my = ys.iter().copied().sum::<T>() / m;
    let sxy: T = xs.iter().zip(&ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let sxx: T = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn rot2(g1: Rational, g2: Rational) -> Type2Weight<f64> {
        Type2Weight::new(vec![1.0, 1.0], vec![g1, g2], UnitaryFamily::Rotation2d).unwrap()
    }

    #[test]
    fn construction_checks_family_dimension() {
        assert!(Type2Weight::<f64>::new(vec![1.0; 3], vec![r(0, 1); 3], UnitaryFamily::Rotation2d).is_err());
        assert!(Type2Weight::<f64>::new(vec![1.0; 2], vec![r(0, 1); 2], UnitaryFamily::Rotation3dEuler).is_err());
        assert!(Type2Weight::<f64>::new(vec![1.0; 2], vec![r(0, 1); 1], UnitaryFamily::Identity).is_err());
        assert!(Type2Weight::<f64>::new(vec![1.0; 4], vec![r(0, 1); 4], UnitaryFamily::Identity).is_ok());
    }

    #[test]
    fn evaluation_examples() {
        let w = Type2Weight::<f64>::new(vec![1.0], vec![r(1, 2)], UnitaryFamily::Identity).unwrap();
        assert!((w.evaluate(4.0).unwrap().get(0, 0).re - 2.0).abs() < 1e-15);

        let flat = rot2(r(0, 1), r(0, 1));
        for x in [-3.0, 0.7, 12.0] {
            assert!(flat.evaluate(x).unwrap().max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
        }

        let w = rot2(r(0, 1), r(1, 2));
        let m = w.evaluate(PI / 2.0).unwrap();
        let want = DenseMatrix::diagonal(&[(PI / 2.0).sqrt(), 1.0]);
        assert!(m.max_abs_diff(&want) < 1e-15);
        assert_eq!(rot2(r(-1, 2), r(0, 1)).evaluate(0.0), Err(Error::EvaluationAtOrigin));
    }

    #[test]
    fn euler_product_matches_expanded_rotation() {
        // R(a, b, c) = R_x(a) R_y(b) R_z(c) in closed form, with a = b = c = x
        let x: f64 = 0.83;
        let (s, c) = x.sin_cos();
        let expanded = [
            [c * c, c * s, -s],
            [s * s * c - c * s, s * s * s + c * c, s * c],
            [c * s * c + s * s, c * s * s - s * c, c * c],
        ];
        let u = rotation_x(x).matmul(&rotation_y(x)).matmul(&rotation_z(x));
        for (i, row) in expanded.iter().enumerate() {
            for (j, want) in row.iter().enumerate() {
                assert!((u.get(i, j).re - want).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn integrability_examples() {
        let w = Type2Weight::new(vec![1.0, 2.0], vec![r(-1, 2), r(3, 10)], UnitaryFamily::Rotation2d).unwrap();
        assert_eq!(w.check_local_integrability().verdict, Verdict::LocallyIntegrable);
        let w = rot2(r(-1, 1), r(0, 1));
        let rep = w.check_local_integrability();
        assert_eq!(rep.verdict, Verdict::NotLocallyIntegrable);
        assert!(matches!(rep.reasons[0], Finding::ExponentNotIntegrable { i: 0, .. }));
        let w = Type2Weight::new(vec![-1.0, 1.0], vec![r(0, 1), r(0, 1)], UnitaryFamily::Rotation2d).unwrap();
        assert_eq!(w.check_local_integrability().verdict, Verdict::NotLocallyIntegrable);
    }

    #[test]
    fn necessary_condition_examples() {
        assert_eq!(
            rot2(r(1, 2), r(-1, 2)).check_necessary_a2().verdict,
            Verdict::InconclusiveNecessaryPassed
        );
        assert_eq!(rot2(r(1, 2), r(3, 2)).check_necessary_a2().verdict, Verdict::NotA2);
        assert_eq!(
            rot2(r(0, 1), r(0, 1)).check_necessary_a2().verdict,
            Verdict::InconclusiveNecessaryPassed
        );
    }

    #[test]
    fn rotation_decision_examples() {
        assert_eq!(
            rot2(r(1, 2), r(1, 2)).decide_rotation_a2().unwrap().verdict,
            Verdict::A2
        );
        let rep = rot2(r(0, 1), r(1, 2)).decide_rotation_a2().unwrap();
        assert_eq!(rep.verdict, Verdict::NotA2);
        assert!(matches!(rep.reasons[0], Finding::UnequalRotationExponents { .. }));
        let w3 = Type2Weight::new(vec![1.0; 3], vec![r(1, 4); 3], UnitaryFamily::Rotation3dEuler).unwrap();
        let rep = w3.decide_rotation_a2().unwrap();
        assert_eq!(rep.verdict, Verdict::A2);
        assert_eq!(rep.notes.len(), 1);
        let id = Type2Weight::new(vec![1.0; 2], vec![r(0, 1); 2], UnitaryFamily::Identity).unwrap();
        assert_eq!(id.decide_rotation_a2(), Err(Error::WrongUnitaryFamily));
        let uneven = Type2Weight::new(vec![1.0, 3.0], vec![r(1, 3); 2], UnitaryFamily::Rotation2d).unwrap();
        let rep = uneven.decide_rotation_a2().unwrap();
        assert_eq!(rep.verdict, Verdict::A2);
        assert!(rep.notes[0].contains("implementation-derived"));
        assert_eq!(
            rot2(r(1, 1), r(1, 1)).decide_rotation_a2().unwrap().verdict,
            Verdict::NotA2
        );
    }

    #[test]
    fn diagonal_entries() {
        let w = rot2(r(1, 3), r(1, 2));
        let d = w.diagonal_entry(0).unwrap();
        for x in [0.3f64, 2.0, 41.0] {
            let want = x.powf(1.0 / 3.0) * x.cos().powi(2) + x.sqrt() * x.sin().powi(2);
            assert!((d.eval(x) - want).abs() < 1e-13);
            assert!((d.eval(x) - w.evaluate(x).unwrap().get(0, 0).re).abs() < 1e-13);
        }
        let id = Type2Weight::<f64>::new(vec![2.0, 5.0], vec![r(1, 2), r(-1, 3)], UnitaryFamily::Identity).unwrap();
        assert!((id.diagonal_entry(1).unwrap().eval(8.0) - 2.5).abs() < 1e-14);
        let eq = rot2(r(1, 4), r(1, 4));
        for i in 0..2 {
            assert!((eq.diagonal_entry(i).unwrap().eval(3.0) - 3f64.powf(0.25)).abs() < 1e-14);
        }
        assert!(w.diagonal_entry(2).is_err());
        assert_eq!(d.singular_exponent_bound(), r(1, 3));
    }

    #[test]
    fn divergence_preconditions() {
        assert!(divergence_experiment::<f64>(r(1, 2), r(1, 2), &[10]).is_err());
        assert!(divergence_experiment::<f64>(r(0, 1), r(1, 1), &[10]).is_err());
        assert!(divergence_experiment::<f64>(r(0, 1), r(1, 2), &[10, 10]).is_err());
        assert!(divergence_experiment::<f64>(r(0, 1), r(1, 2), &[0, 10]).is_err());
    }

    #[test]
    fn divergence_small_run() {
        let rows = divergence_experiment::<f64>(r(0, 1), r(1, 2), &[10, 100, 1000]).unwrap();
        assert_eq!(rows.len(), 3);
        for row in &rows {
            assert!(row.product >= 1.0);
            assert!((row.product - row.avg_w * row.avg_winv).abs() < 1e-15 * row.product);
            assert!((row.b - row.a - PI).abs() < 1e-9);
        }
        assert!(rows[2].product > rows[1].product && rows[1].product > rows[0].product);
    }

    #[test]
    fn log_spaced_n() {
        let ns = log_spaced_indices(100, 100_000, 13).unwrap();
        assert_eq!(ns.len(), 13);
        assert_eq!(ns[0], 100);
        assert_eq!(ns[4], 1000);
        assert_eq!(ns[12], 100_000);
        assert!(log_spaced_indices(0, 10, 3).is_err());
    }

    #[test]
    fn slope_of_exact_power_law() {
        let rows: Vec<DivergenceRow<f64>> = [10u64, 100, 1000]
            .iter()
            .map(|&n| DivergenceRow {
                n,
                a: 0.0,
                b: 1.0,
                avg_w: 1.0,
                avg_winv: 1.0,
                product: 3.0 * (n as f64).powf(0.25),
            })
            .collect();
        assert!((loglog_slope(&rows).unwrap() - 0.25).abs() < 1e-12);
    }
}
