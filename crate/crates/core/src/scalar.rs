//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::Rational64;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Exact exponent type. Always stored reduced with a positive denominator.
pub type Rational = Rational64;

/// Floating-point scalar the numeric kernels are generic over (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    /// A relative tolerance that is never finer than the type can resolve.
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(16.0))
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an exact exponent into the floating scalar.
pub fn rational_to<T: Real>(r: Rational) -> T {
    T::lit(*r.numer() as f64) / T::lit(*r.denom() as f64)
}

/// `n` points spaced evenly in log10 between `lo` and `hi` (inclusive).
pub fn logspace<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (l0, l1) = (lo.log10(), hi.log10());
            let step = (l1 - l0) / T::lit((n - 1) as f64);
            (0..n)
                .map(|k| T::lit(10.0).powf(l0 + step * T::lit(k as f64)))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_conversion() {
        assert_eq!(rational_to::<f64>(Rational::new(-2, 3)), -2.0 / 3.0);
        assert_eq!(rational_to::<f32>(Rational::new(1, 2)), 0.5f32);
    }

    #[test]
    fn logspace_endpoints() {
        let g = logspace(1e-6, 1e6, 49);
        assert_eq!(g.len(), 49);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[48] / 1e6 - 1.0).abs() < 1e-12);
        assert!((g[24] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tolerance_floor_for_f32() {
        assert!(f32::tol(1e-12) > 1e-7);
        assert_eq!(f64::tol(1e-9), 1e-9);
    }
}
