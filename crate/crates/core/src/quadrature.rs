//! Adaptive Gauss-Kronrod integration of vector-valued integrands and tensor
//! Gauss-Legendre rules for cubes.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
// Gauss weights for the 7-point rule at XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Gauss-Legendre nodes and weights on [-1, 1], order 4.
pub const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_8),
];

/// Gauss-Legendre nodes and weights on [-1, 1], order 8.
pub const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_5),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_3),
];

/// Acceptance rule: entry `k` is converged when `err_k <= abs + rel * |I_k|`.
#[derive(Clone, Copy, Debug)]
pub struct QuadTol<T> {
    pub abs: T,
    pub rel: T,
    pub max_panels: usize,
}

#[derive(Clone, Debug)]
pub struct QuadOutput<T> {
    pub values: Vec<Complex<T>>,
    pub errors: Vec<T>,
    pub panels: usize,
}

struct Panel<T> {
    a: T,
    b: T,
    values: Vec<Complex<T>>,
    errors: Vec<T>,
    worst: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.worst
            .partial_cmp(&other.worst)
            .unwrap_or(Ordering::Equal)
            // deterministic among equal errors: leftmost panel first
            .then_with(|| other.a.partial_cmp(&self.a).unwrap_or(Ordering::Equal))
    }
}

fn gk15<T: Real, F>(f: &F, a: T, b: T, m: usize) -> Panel<T>
where
    F: Fn(T) -> Vec<Complex<T>>,
{
    let center = (a + b) * T::lit(0.5);
    let half = (b - a) * T::lit(0.5);
    let mut kron = vec![Complex::<T>::zero(); m];
    let mut gauss = vec![Complex::<T>::zero(); m];
    let mut accumulate = |x: T, wk: T, wg: Option<T>| {
        let fx = f(x);
        for k in 0..m {
            kron[k] = kron[k] + fx[k] * wk;
            if let Some(wg) = wg {
                gauss[k] = gauss[k] + fx[k] * wg;
            }
        }
    };
    accumulate(center, T::lit(WGK[7]), Some(T::lit(WG[3])));
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let wg = if j % 2 == 1 { Some(T::lit(WG[j / 2])) } else { None };
        accumulate(center - dx, T::lit(WGK[j]), wg);
        accumulate(center + dx, T::lit(WGK[j]), wg);
    }
    let values: Vec<Complex<T>> = kron.iter().map(|z| *z * half).collect();
    let errors: Vec<T> = kron
        .iter()
        .zip(&gauss)
        .map(|(k, g)| ((*k - *g) * half).norm())
        .collect();
    let worst = errors.iter().fold(T::zero(), |m, &e| m.max(e));
    Panel {
        a,
        b,
        values,
        errors,
        worst,
    }
}

/// Globally adaptive G7-K15 integration of an `m`-component integrand over
/// `[a, b]`, with `breakpoints` forced as panel boundaries. The integrand is
/// never evaluated at a panel endpoint.
pub fn integrate_adaptive<T: Real, F>(
    f: F,
    m: usize,
    a: T,
    b: T,
    breakpoints: &[T],
    tol: QuadTol<T>,
) -> Result<QuadOutput<T>>
where
    F: Fn(T) -> Vec<Complex<T>>,
{
    let mut cuts = vec![a];
    cuts.extend(breakpoints.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);

    let mut heap: BinaryHeap<Panel<T>> = cuts.windows(2).map(|w| gk15(&f, w[0], w[1], m)).collect();
    let mut panels = heap.len();

    let sum_heap = |heap: &BinaryHeap<Panel<T>>| {
        let mut values = vec![Complex::<T>::zero(); m];
        let mut errors = vec![T::zero(); m];
        for p in heap.iter() {
            for k in 0..m {
                values[k] = values[k] + p.values[k];
                errors[k] = errors[k] + p.errors[k];
            }
        }
        (values, errors)
    };
    let converged =
        |values: &[Complex<T>], errors: &[T]| (0..m).all(|k| errors[k] <= tol.abs + tol.rel * values[k].norm());

    // running totals, re-summed exactly before accepting
    let (mut values, mut errors) = sum_heap(&heap);
    loop {
        if converged(&values, &errors) {
            let (exact_values, exact_errors) = sum_heap(&heap);
            if converged(&exact_values, &exact_errors) {
                return Ok(QuadOutput {
                    values: exact_values,
                    errors: exact_errors,
                    panels,
                });
            }
            values = exact_values;
            errors = exact_errors;
        }
        if panels >= tol.max_panels {
            return Err(Error::QuadratureBudgetExceeded { panels });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = (worst.a + worst.b) * T::lit(0.5);
        if !(mid > worst.a && mid < worst.b) {
            // interval can no longer be split in this precision
            return Err(Error::QuadratureBudgetExceeded { panels });
        }
        let left = gk15(&f, worst.a, mid, m);
        let right = gk15(&f, mid, worst.b, m);
        for k in 0..m {
            values[k] = values[k] - worst.values[k] + left.values[k] + right.values[k];
            errors[k] = (errors[k] - worst.errors[k] + left.errors[k] + right.errors[k]).max(T::zero());
        }
        heap.push(left);
        heap.push(right);
        panels += 1;
    }
}

/// Scalar convenience wrapper around [`integrate_adaptive`].
pub fn integrate_scalar<T: Real, F>(f: F, a: T, b: T, breakpoints: &[T], tol: QuadTol<T>) -> Result<(T, T)>
where
    F: Fn(T) -> T,
{
    let out = integrate_adaptive(|x| vec![Complex::new(f(x), T::zero())], 1, a, b, breakpoints, tol)?;
    Ok((out.values[0].re, out.errors[0]))
}

/// Tensor-product Gauss-Legendre rule over an axis-aligned box given by its
/// lower corner and a common side length.
pub fn tensor_gauss<T: Real, F>(f: &F, lower: &[T], side: T, rule: &[(f64, f64)]) -> T
where
    F: Fn(&[T]) -> T,
{
    let d = lower.len();
    let half = side * T::lit(0.5);
    let order = rule.len();
    let total = order.pow(d as u32);
    let mut point = vec![T::zero(); d];
    let mut sum = T::zero();
    for idx in 0..total {
        let mut rem = idx;
        let mut w = T::one();
        for c in 0..d {
            let (x, wx) = rule[rem % order];
            rem /= order;
            point[c] = lower[c] + half * (T::one() + T::lit(x));
            w = w * T::lit(wx);
        }
        sum = sum + w * f(&point);
    }
    sum * half.powi(d as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol(t: f64) -> QuadTol<f64> {
        QuadTol {
            abs: t,
            rel: t,
            max_panels: 20_000,
        }
    }

    #[test]
    fn smooth_polynomial_exact() {
        let (v, _) = integrate_scalar(|x: f64| x * x * x - 2.0 * x, -1.0, 2.0, &[], tol(1e-12)).unwrap();
        assert!((v - (4.0 - 1.0 / 4.0 - 3.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        let (v, _) = integrate_scalar(|x: f64| x.abs().powf(-0.5), -1.0, 1.0, &[0.0], tol(1e-10)).unwrap();
        assert!((v - 4.0).abs() < 1e-8);
        let (v, _) = integrate_scalar(|x: f64| x.powf(-0.9), 0.0, 1.0, &[], tol(1e-8)).unwrap();
        assert!((v - 10.0).abs() < 1e-6);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let t = QuadTol {
            abs: 1e-14,
            rel: 1e-14,
            max_panels: 4,
        };
        let r = integrate_scalar(|x: f64| (50.0 * x).sin().abs(), 0.0, 10.0, &[], t);
        assert!(matches!(r, Err(Error::QuadratureBudgetExceeded { .. })));
    }

    #[test]
    fn tensor_gauss_integrates_polynomials() {
        let f = |x: &[f64]| x[0] * x[0] * x[1];
        let v = tensor_gauss(&f, &[0.0, 0.0], 1.0, &GL8);
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        let v = tensor_gauss(&|x: &[f64]| x[0] * x[1] * x[2] + 1.0, &[-1.0, 0.0, 0.0], 2.0, &GL4);
        // [-1,1]x[0,2]x[0,2]: 0 + volume 8
        assert!((v - 8.0).abs() < 1e-13);
    }
}
