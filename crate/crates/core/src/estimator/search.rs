use std::cell::RefCell;

use rayon::prelude::*;

use super::{a2_functional_norm, a2_functional_trace, Functional, IntervalAverages, DEFAULT_MAX_PANELS};
use crate::error::{Error, Result};
use crate::scalar::{logspace, Real};
use crate::scalar_power::Interval;

/// Candidate intervals are `[c - h, c + h]` for every center `c` and
/// half-length `h` in the grids.
#[derive(Clone, Debug, PartialEq)]
pub struct SupSearchConfig<T> {
    pub center_grid: Vec<T>,
    pub halflength_grid: Vec<T>,
    /// Rounds of coordinate-wise golden-section refinement in
    /// `(log |center|, log half-length)` around the best grid point.
    pub refine_rounds: usize,
    /// Per-entry tolerance for quadrature-based averages.
    pub quadrature_tol: T,
    pub max_panels: usize,
}

const GOLDEN_ITERS: usize = 24;

impl<T: Real> SupSearchConfig<T> {
    /// Centers `{0} ∪ ±logspace(lo, hi, points)` and half-lengths
    /// `logspace(lo, hi, points)`.
    pub fn log_grid(lo: T, hi: T, points: usize, refine_rounds: usize) -> Self {
        let positive = logspace(lo, hi, points);
        let mut centers: Vec<T> = positive.iter().rev().map(|&c| -c).collect();
        centers.push(T::zero());
        centers.extend(positive.iter().copied());
        Self {
            center_grid: centers,
            halflength_grid: positive,
            refine_rounds,
            quadrature_tol: T::tol(1e-10),
            max_panels: DEFAULT_MAX_PANELS,
        }
    }

    /// 49 log-spaced points over `[1e-6, 1e6]`, 20 refinement rounds.
    pub fn fine() -> Self {
        Self::log_grid(T::lit(1e-6), T::lit(1e6), 49, 20)
    }

    pub fn coarse() -> Self {
        Self::log_grid(T::lit(1e-6), T::lit(1e6), 25, 20)
    }

    /// Grid sized for quadrature-based averages, whose cost grows with the
    /// number of oscillations inside an interval.
    pub fn quadrature_fine() -> Self {
        let mut cfg = Self::log_grid(T::lit(1e-3), T::lit(1e3), 25, 10);
        cfg.quadrature_tol = T::tol(1e-9);
        cfg
    }

    pub fn quadrature_coarse() -> Self {
        let mut cfg = Self::log_grid(T::lit(1e-2), T::lit(1e2), 13, 6);
        cfg.quadrature_tol = T::tol(1e-9);
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.center_grid.is_empty() || self.halflength_grid.is_empty() {
            return Err(Error::InvalidConfig("search grids must be nonempty".into()));
        }
        if self.halflength_grid.iter().any(|&h| !(h > T::zero() && h.is_finite())) {
            return Err(Error::InvalidConfig("half-lengths must be positive and finite".into()));
        }
        if self.center_grid.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("centers must be finite".into()));
        }
        if !(self.quadrature_tol > T::zero()) {
            return Err(Error::InvalidConfig("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Inserts a point between every pair of neighbouring grid values
    /// (geometric mean between same-signed values, arithmetic otherwise).
    pub fn densified(&self) -> Self {
        Self {
            center_grid: densify(&self.center_grid),
            halflength_grid: densify(&self.halflength_grid),
            ..self.clone()
        }
    }

    fn log_step(&self) -> T {
        let mut sorted = self.halflength_grid.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
        let step = sorted
            .windows(2)
            .map(|w| (w[1] / w[0]).ln())
            .fold(T::zero(), |m, s| m.max(s));
        if step > T::zero() {
            step
        } else {
            T::lit(2.0).ln()
        }
    }
}

impl<T: Real> Default for SupSearchConfig<T> {
    fn default() -> Self {
        Self::fine()
    }
}

fn densify<T: Real>(grid: &[T]) -> Vec<T> {
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    sorted.dedup();
    let mut out = Vec::with_capacity(2 * sorted.len());
    for w in sorted.windows(2) {
        out.push(w[0]);
        let mid = if w[0] > T::zero() && w[1] > T::zero() {
            (w[0] * w[1]).sqrt()
        } else if w[0] < T::zero() && w[1] < T::zero() {
            -(w[0] * w[1]).sqrt()
        } else {
            (w[0] + w[1]) * T::lit(0.5)
        };
        out.push(mid);
    }
    out.extend(sorted.last().copied());
    out
}

/// Best value found by a sup search, with the interval achieving it.
#[derive(Clone, Debug, PartialEq)]
pub struct SupSearchResult<T> {
    /// Largest functional value over every evaluated interval; a lower
    /// bound for the supremum.
    pub estimate: T,
    pub argmax: Interval<T>,
    pub functional: Functional,
    /// Total functional evaluations (grid plus refinement).
    pub evaluations: usize,
    pub grid_evaluations: usize,
    /// Best value over the grid alone.
    pub grid_estimate: T,
    /// Grid candidates that do not form a representable interval.
    pub skipped: usize,
}

pub fn evaluate_functional<T: Real, W: IntervalAverages<T> + ?Sized>(
    weight: &W,
    functional: Functional,
    interval: &Interval<T>,
) -> Result<T> {
    let avg = weight.average(interval)?;
    let avg_inv = weight.average_inverse(interval)?;
    match functional {
        Functional::Trace => a2_functional_trace(&avg, &avg_inv),
        Functional::Norm => a2_functional_norm(&avg, &avg_inv),
    }
}

/// Maximises `f` over `[lo, hi]` by golden-section search and returns the
/// best point seen, which is exact for unimodal `f`.
pub fn golden_section_max<T: Real, F: Fn(T) -> T>(f: &F, lo: T, hi: T, iters: usize) -> (T, T) {
    let inv_phi = (T::lit(5.0).sqrt() - T::one()) * T::lit(0.5);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f2 > f1 { (x2, f2) } else { (x1, f1) };
    for _ in 0..iters {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = f(x1);
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = f(x2);
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

struct Incumbent<T> {
    value: T,
    center: T,
    half: T,
    evaluations: usize,
    error: Option<Error>,
}

/// Sup of the chosen functional over the configured intervals.
///
/// The grid is evaluated in parallel and reduced in grid order (ties keep
/// the earliest candidate). Refinement then runs golden-section passes on
/// `log |center|` (skipped for the center-zero slice) and `log h`, each
/// within one grid step of the incumbent.
pub fn estimate_a2<T: Real, W: IntervalAverages<T>>(
    weight: &W,
    functional: Functional,
    cfg: &SupSearchConfig<T>,
) -> Result<SupSearchResult<T>> {
    cfg.validate()?;
    let candidates: Vec<(T, T)> = cfg
        .center_grid
        .iter()
        .flat_map(|&c| cfg.halflength_grid.iter().map(move |&h| (c, h)))
        .collect();
    let values: Vec<Option<Result<T>>> = candidates
        .par_iter()
        .map(|&(c, h)| match Interval::centered(c, h) {
            Ok(i) => Some(evaluate_functional(weight, functional, &i)),
            Err(_) => None,
        })
        .collect();

    let mut best: Option<(usize, T)> = None;
    let mut skipped = 0;
    for (k, v) in values.into_iter().enumerate() {
        match v {
            None => skipped += 1,
            Some(Err(e)) => return Err(e),
            Some(Ok(v)) => {
                if !v.is_finite() {
                    return Err(Error::Precondition(format!(
                        "functional is not finite on candidate {k}"
                    )));
                }
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((k, v));
                }
            }
        }
    }
    let (k, grid_estimate) = best.ok_or_else(|| Error::InvalidConfig("no representable candidate interval".into()))?;
    let grid_evaluations = candidates.len() - skipped;

    let state = RefCell::new(Incumbent {
        value: grid_estimate,
        center: candidates[k].0,
        half: candidates[k].1,
        evaluations: grid_evaluations,
        error: None,
    });
    let probe = |c: T, h: T| -> T {
        let Ok(interval) = Interval::centered(c, h) else {
            return T::neg_infinity();
        };
        let outcome = evaluate_functional(weight, functional, &interval);
        let mut s = state.borrow_mut();
        s.evaluations += 1;
        match outcome {
            Ok(v) if v.is_finite() => {
                if v > s.value {
                    s.value = v;
                    s.center = c;
                    s.half = h;
                }
                v
            }
            Ok(_) => T::neg_infinity(),
            Err(e) => {
                s.error.get_or_insert(e);
                T::neg_infinity()
            }
        }
    };

    let step = cfg.log_step();
    for _ in 0..cfg.refine_rounds {
        let (c0, h0) = {
            let s = state.borrow();
            (s.center, s.half)
        };
        if c0 != T::zero() {
            let sign = c0.signum();
            let x0 = c0.abs().ln();
            golden_section_max(&|x: T| probe(sign * x.exp(), h0), x0 - step, x0 + step, GOLDEN_ITERS);
        }
        let (c1, h1) = {
            let s = state.borrow();
            (s.center, s.half)
        };
        let y0 = h1.ln();
        golden_section_max(&|y: T| probe(c1, y.exp()), y0 - step, y0 + step, GOLDEN_ITERS);
        if let Some(e) = state.borrow_mut().error.take() {
            return Err(e);
        }
    }

    let s = state.into_inner();
    Ok(SupSearchResult {
        estimate: s.value,
        argmax: Interval::centered(s.center, s.half)?,
        functional,
        evaluations: s.evaluations,
        grid_evaluations,
        grid_estimate,
        skipped,
    })
}

/// Estimates at successively densified grids.
#[derive(Clone, Debug, PartialEq)]
pub struct Saturation<T> {
    pub estimates: Vec<T>,
    /// Relative change between consecutive levels.
    pub relative_changes: Vec<T>,
    /// Last relative change below 0.1%.
    pub saturated: bool,
}

pub fn certify_saturation<T: Real, W: IntervalAverages<T>>(
    weight: &W,
    functional: Functional,
    cfg: &SupSearchConfig<T>,
    levels: usize,
) -> Result<Saturation<T>> {
    let mut estimates = Vec::with_capacity(levels + 1);
    let mut level_cfg = cfg.clone();
    for level in 0..=levels {
        if level > 0 {
            level_cfg = level_cfg.densified();
        }
        estimates.push(estimate_a2(weight, functional, &level_cfg)?.estimate);
    }
    let relative_changes: Vec<T> = estimates.windows(2).map(|w| ((w[1] - w[0]) / w[0]).abs()).collect();
    let saturated = relative_changes.last().is_some_and(|&r| r < T::lit(1e-3));
    Ok(Saturation {
        estimates,
        relative_changes,
        saturated,
    })
}
