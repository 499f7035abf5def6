//! Interval averages of matrix weights, the trace and norm A₂ functionals,
//! and the supremum search over intervals.

mod search;

pub use search::{
    certify_saturation, estimate_a2, evaluate_functional, golden_section_max, Saturation, SupSearchConfig,
    SupSearchResult,
};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::linalg::{operator_norm, sqrt_psd, sym_eigen, DenseMatrix, SelfAdjointMatrix};
use crate::quadrature::{integrate_adaptive, QuadTol};
use crate::scalar::{Rational, Real};
use crate::scalar_power::{average_abs_pow, Interval};
use crate::type1::SymbolicPowerMatrix;
use crate::type2::Type2Weight;

/// Default panel budget for numeric interval averages.
pub const DEFAULT_MAX_PANELS: usize = 20_000;

/// Which of the two equivalent A₂ quantities to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Functional {
    /// `Tr(⟨W⟩_I ⟨W⁻¹⟩_I)`
    Trace,
    /// `‖⟨W⟩_I^{1/2} ⟨W⁻¹⟩_I^{1/2}‖²`
    Norm,
}

impl Functional {
    pub fn as_str(&self) -> &'static str {
        match self {
            Functional::Trace => "trace",
            Functional::Norm => "norm",
        }
    }
}

/// Entrywise interval average of a symbolic power matrix via the closed
/// forms for `⟨|x|^γ⟩_I`.
pub fn average_symbolic<T: Real>(w: &SymbolicPowerMatrix<T>, interval: &Interval<T>) -> Result<SelfAdjointMatrix<T>> {
    let n = w.dim();
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let a = w.coeff().get(i, j);
            if a.is_zero() {
                continue;
            }
            let e = w.exponent(i, j);
            let avg = average_abs_pow(e, interval).map_err(|_| Error::NonIntegrableEntry { i, j, exponent: e })?;
            out.set(i, j, a * (w.global_scale() * avg));
        }
    }
    Ok(SelfAdjointMatrix::symmetrized(&out))
}

/// Interval average of a pointwise matrix function by adaptive quadrature.
///
/// `singular_exponent_bound` is a lower bound for the exponents of the
/// power terms dominating the entries near the origin; averages over
/// intervals meeting the origin require it to exceed `-1`. The origin is a
/// forced breakpoint, and bisection grades panels geometrically toward it.
pub fn average_numeric<T: Real, F>(
    weight_fn: F,
    n: usize,
    singular_exponent_bound: Rational,
    interval: &Interval<T>,
    tol: T,
    max_panels: usize,
) -> Result<SelfAdjointMatrix<T>>
where
    F: Fn(T) -> DenseMatrix<T>,
{
    if interval.contains_origin() && singular_exponent_bound <= -Rational::one() {
        return Err(Error::NonIntegrable {
            exponent: singular_exponent_bound,
        });
    }
    let len = interval.len();
    let quad = QuadTol {
        abs: tol * len,
        rel: tol,
        max_panels,
    };
    let out = integrate_adaptive(
        |x| weight_fn(x).entries().to_vec(),
        n * n,
        interval.a(),
        interval.b(),
        &[T::zero()],
        quad,
    )?;
    let inv_len = Complex::new(T::one() / len, T::zero());
    let avg = DenseMatrix::from_fn(n, |i, j| out.values[i * n + j] * inv_len);
    Ok(SelfAdjointMatrix::symmetrized(&avg))
}

fn require_positive<T: Real>(m: &SelfAdjointMatrix<T>) -> Result<()> {
    if sym_eigen(m)?.min() > T::zero() {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite)
    }
}

/// `Re Tr(⟨W⟩ ⟨W⁻¹⟩)`; at least `n` for genuine averages.
pub fn a2_functional_trace<T: Real>(avg_w: &SelfAdjointMatrix<T>, avg_w_inv: &SelfAdjointMatrix<T>) -> Result<T> {
    require_positive(avg_w)?;
    require_positive(avg_w_inv)?;
    Ok(trace_product(avg_w, avg_w_inv))
}

fn trace_product<T: Real>(a: &DenseMatrix<T>, b: &DenseMatrix<T>) -> T {
    let n = a.dim();
    let mut sum = Complex::zero();
    for i in 0..n {
        for j in 0..n {
            sum = sum + a.get(i, j) * b.get(j, i);
        }
    }
    sum.re
}

/// `‖⟨W⟩^{1/2} ⟨W⁻¹⟩^{1/2}‖²`; at least 1 for genuine averages.
pub fn a2_functional_norm<T: Real>(avg_w: &SelfAdjointMatrix<T>, avg_w_inv: &SelfAdjointMatrix<T>) -> Result<T> {
    require_positive(avg_w)?;
    require_positive(avg_w_inv)?;
    let a = sqrt_psd(avg_w)?;
    let b = sqrt_psd(avg_w_inv)?;
    let norm = operator_norm(&a.matmul(&b))?;
    Ok(norm * norm)
}

/// A weight whose averages, and the averages of its inverse, can be taken
/// over any interval.
pub trait IntervalAverages<T: Real>: Sync {
    fn dim(&self) -> usize;

    fn average(&self, interval: &Interval<T>) -> Result<SelfAdjointMatrix<T>>;

    fn average_inverse(&self, interval: &Interval<T>) -> Result<SelfAdjointMatrix<T>>;
}

/// A symbolic power matrix paired with its closed-form inverse.
#[derive(Clone, Debug)]
pub struct SymbolicAverager<T> {
    weight: SymbolicPowerMatrix<T>,
    inverse: SymbolicPowerMatrix<T>,
}

impl<T: Real> SymbolicAverager<T> {
    /// Requires every exponent of `W` and `W⁻¹` with a nonzero coefficient
    /// to exceed `-1`, so averages exist on every interval.
    pub fn new(weight: &SymbolicPowerMatrix<T>) -> Result<Self> {
        let weight = weight.normalized();
        let inverse = weight.symbolic_inverse()?;
        for w in [&weight, &inverse] {
            let n = w.dim();
            for i in 0..n {
                for j in 0..n {
                    let e = w.exponent(i, j);
                    if !w.coeff().get(i, j).is_zero() && e <= -Rational::one() {
                        return Err(Error::NonIntegrableEntry { i, j, exponent: e });
                    }
                }
            }
        }
        Ok(Self { weight, inverse })
    }

    pub fn weight(&self) -> &SymbolicPowerMatrix<T> {
        &self.weight
    }

    pub fn inverse(&self) -> &SymbolicPowerMatrix<T> {
        &self.inverse
    }
}

impl<T: Real> IntervalAverages<T> for SymbolicAverager<T> {
    fn dim(&self) -> usize {
        self.weight.dim()
    }

    fn average(&self, interval: &Interval<T>) -> Result<SelfAdjointMatrix<T>> {
        average_symbolic(&self.weight, interval)
    }

    fn average_inverse(&self, interval: &Interval<T>) -> Result<SelfAdjointMatrix<T>> {
        average_symbolic(&self.inverse, interval)
    }
}

/// A Type 2 weight and its inverse, averaged by quadrature.
#[derive(Clone, Debug)]
pub struct Type2Averager<T> {
    weight: Type2Weight<T>,
    inverse: Type2Weight<T>,
    tol: T,
    max_panels: usize,
}

impl<T: Real> Type2Averager<T> {
    /// Requires `α_i > 0` and `-1 < γ_i < 1` so both `W` and `W⁻¹` are
    /// locally integrable.
    pub fn new(weight: &Type2Weight<T>, tol: T, max_panels: usize) -> Result<Self> {
        let report = weight.check_necessary_a2();
        if !report.verdict.is_positive() {
            return Err(Error::Precondition(format!(
                "weight or its inverse is not locally integrable ({})",
                report.verdict
            )));
        }
        Ok(Self {
            weight: weight.clone(),
            inverse: weight.inverse()?,
            tol,
            max_panels,
        })
    }
}

fn average_type2<T: Real>(
    w: &Type2Weight<T>,
    interval: &Interval<T>,
    tol: T,
    max_panels: usize,
) -> Result<SelfAdjointMatrix<T>> {
    average_numeric(
        |x| match w.evaluate(x) {
            Ok(m) => m.into_matrix(),
            // only reachable at x = 0, which the rule never samples
            Err(_) => DenseMatrix::zeros(w.dim()),
        },
        w.dim(),
        w.singular_exponent_bound(),
        interval,
        tol,
        max_panels,
    )
}

impl<T: Real> IntervalAverages<T> for Type2Averager<T> {
    fn dim(&self) -> usize {
        self.weight.dim()
    }

    fn average(&self, interval: &Interval<T>) -> Result<SelfAdjointMatrix<T>> {
        average_type2(&self.weight, interval, self.tol, self.max_panels)
    }

    fn average_inverse(&self, interval: &Interval<T>) -> Result<SelfAdjointMatrix<T>> {
        average_type2(&self.inverse, interval, self.tol, self.max_panels)
    }
}

/// Sup search for a symbolic power matrix. Fails unless `W` and `W⁻¹` are
/// locally integrable.
pub fn estimate_a2_symbolic<T: Real>(
    weight: &SymbolicPowerMatrix<T>,
    functional: Functional,
    cfg: &SupSearchConfig<T>,
) -> Result<SupSearchResult<T>> {
    let averager = SymbolicAverager::new(weight)?;
    estimate_a2(&averager, functional, cfg)
}

/// Sup search for a Type 2 weight with quadrature averages.
pub fn estimate_a2_type2<T: Real>(
    weight: &Type2Weight<T>,
    functional: Functional,
    cfg: &SupSearchConfig<T>,
) -> Result<SupSearchResult<T>> {
    let averager = Type2Averager::new(weight, cfg.quadrature_tol, cfg.max_panels)?;
    estimate_a2(&averager, functional, cfg)
}
