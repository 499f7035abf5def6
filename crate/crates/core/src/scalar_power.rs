//! Closed-form calculus for scalar power weights `a|x|^γ`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::estimator::{golden_section_max, SupSearchConfig, SupSearchResult};
use crate::scalar::{rational_to, Rational, Real};

/// Closed interval `[a, b]` with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T> {
    a: T,
    b: T,
}

impl<T: Real> Interval<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInterval {
                a: a.to_f64_lossy(),
                b: b.to_f64_lossy(),
            });
        }
        Ok(Self { a, b })
    }

    /// `[center - half, center + half]`
    pub fn centered(center: T, half: T) -> Result<Self> {
        Self::new(center - half, center + half)
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn len(&self) -> T {
        self.b - self.a
    }

    pub fn center(&self) -> T {
        (self.a + self.b) * T::lit(0.5)
    }

    pub fn half_length(&self) -> T {
        self.len() * T::lit(0.5)
    }

    /// True when the closed interval meets the origin.
    pub fn contains_origin(&self) -> bool {
        self.a <= T::zero() && self.b >= T::zero()
    }

    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.a * factor, self.b * factor)
    }

    pub fn reflected(&self) -> Self {
        Self { a: -self.b, b: -self.a }
    }
}

/// `coeff * |x|^exponent` with `coeff > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalarPowerWeight<T> {
    coeff: T,
    exponent: Rational,
}

impl<T: Real> ScalarPowerWeight<T> {
    pub fn new(coeff: T, exponent: Rational) -> Result<Self> {
        if !(coeff > T::zero() && coeff.is_finite()) {
            return Err(Error::Precondition(format!(
                "scalar weight coefficient must be positive, got {coeff}"
            )));
        }
        Ok(Self { coeff, exponent })
    }

    pub fn coeff(&self) -> T {
        self.coeff
    }

    pub fn exponent(&self) -> Rational {
        self.exponent
    }
}

// Mean of x^γ over [lo, lo + h] with 0 < lo, written so that short intervals
// far from the origin do not cancel.
fn mean_origin_free<T: Real>(gamma: Rational, lo: T, h: T) -> T {
    let p = gamma + Rational::one();
    let ratio = (h / lo).ln_1p();
    if p.is_zero() {
        ratio / h
    } else {
        let pf = rational_to::<T>(p);
        lo.powf(pf) * (pf * ratio).exp_m1() / (pf * h)
    }
}

/// Exact `∫_I |x|^γ dx`.
///
/// Intervals meeting the origin require `γ > -1`. The `γ = -1` case is
/// supported on origin-free intervals through the logarithm.
pub fn integral_abs_pow<T: Real>(gamma: Rational, interval: &Interval<T>) -> Result<T> {
    Ok(average_abs_pow(gamma, interval)? * interval.len())
}

/// `⟨|x|^γ⟩_I = (1/|I|) ∫_I |x|^γ dx`.
pub fn average_abs_pow<T: Real>(gamma: Rational, interval: &Interval<T>) -> Result<T> {
    let (a, b) = (interval.a(), interval.b());
    if gamma.is_zero() {
        return Ok(T::one());
    }
    if a > T::zero() {
        return Ok(mean_origin_free(gamma, a, b - a));
    }
    if b < T::zero() {
        return Ok(mean_origin_free(gamma, -b, b - a));
    }
    if gamma <= -Rational::one() {
        return Err(Error::NonIntegrable { exponent: gamma });
    }
    let p = rational_to::<T>(gamma + Rational::one());
    let total = ((-a).powf(p) + b.powf(p)) / p;
    Ok(total / (b - a))
}

/// `|x|^γ` is a scalar A₂ weight iff `-1 < γ < 1`.
pub fn scalar_is_a2(gamma: Rational) -> bool {
    -Rational::one() < gamma && gamma < Rational::one()
}

/// `⟨|x|^γ⟩⟨|x|^{-γ}⟩` on any interval with one endpoint at the origin:
/// `1/((1+γ)(1-γ))`.
pub fn abutting_product<T: Real>(gamma: Rational) -> Result<T> {
    if !scalar_is_a2(gamma) {
        return Err(Error::Precondition(format!("exponent {gamma} outside (-1, 1)")));
    }
    let g = rational_to::<T>(gamma);
    Ok(T::one() / ((T::one() + g) * (T::one() - g)))
}

// Product on [-1, s] with s = e^u, in a form that stays finite for large u.
fn straddling_product<T: Real>(g: T, u: T) -> T {
    let p = T::one() + g;
    let q = T::one() - g;
    let e = (-u).exp();
    (e + (g * u).exp()) * (e + (-g * u).exp()) / (p * q * (T::one() + e).powi(2))
}

/// The A₂ constant `sup_I ⟨|x|^γ⟩_I ⟨|x|^{-γ}⟩_I` of `|x|^γ`.
///
/// Dilations and the reflection `x -> -x` leave the product unchanged, so
/// every interval is equivalent to `[-1, s]` with `s >= 1`, to `[0, 1]`, or
/// to an origin-free `[t, 1]`. The origin-free family never exceeds the
/// `[0, 1]` value, which is itself the `s -> ∞` limit of the straddling
/// family, so the constant is a one-dimensional maximisation over `s`.
pub fn scalar_a2_constant<T: Real>(gamma: Rational) -> Result<T> {
    if !scalar_is_a2(gamma) {
        return Err(Error::Precondition(format!("exponent {gamma} outside (-1, 1)")));
    }
    if gamma.is_zero() {
        return Ok(T::one());
    }
    let g = rational_to::<T>(gamma);
    let f = |u: T| straddling_product(g, u);
    let (lo, hi, points) = (T::zero(), T::lit(200.0), 2001);
    let step = (hi - lo) / T::lit((points - 1) as f64);
    let (mut best_k, mut best) = (0, f(lo));
    for k in 1..points {
        let v = f(lo + step * T::lit(k as f64));
        if v > best {
            best = v;
            best_k = k;
        }
    }
    let center = lo + step * T::lit(best_k as f64);
    let (_, refined) = golden_section_max(&f, (center - step).max(lo), center + step, 80);
    Ok(best.max(refined).max(abutting_product(gamma)?))
}

/// Numeric sup of `⟨w⟩_I ⟨w^{-1}⟩_I` over the configured interval family,
/// with local refinement. The result is a lower bound for the constant.
pub fn scalar_a2_constant_estimate<T: Real>(
    weight: &ScalarPowerWeight<T>,
    cfg: &SupSearchConfig<T>,
) -> Result<SupSearchResult<T>> {
    if !scalar_is_a2(weight.exponent()) {
        return Err(Error::Precondition(format!(
            "|x|^{} is not an A2 weight",
            weight.exponent()
        )));
    }
    let symbolic = crate::type1::SymbolicPowerMatrix::scalar(weight.coeff(), weight.exponent());
    crate::estimator::estimate_a2_symbolic(&symbolic, crate::estimator::Functional::Trace, cfg)
}
