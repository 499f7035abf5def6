//! Multivariable power weights on cubes in `R^d`, `d ∈ {2, 3}`:
//! separable weights `a_ij Π_c |x_c|^{γ_ij,c}` (Type 1.a) and radial weights
//! `a_ij ‖x‖^{γ_ij}` (Type 1.b).

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use num_complex::Complex;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimator::{a2_functional_norm, a2_functional_trace, golden_section_max, Functional};
use crate::linalg::{lu_det, DenseMatrix, SelfAdjointMatrix};
use crate::quadrature::{tensor_gauss, GL4, GL8};
use crate::report::{A2Report, Finding, Verdict};
use crate::scalar::{logspace, rational_to, Rational, Real};
use crate::scalar_power::{average_abs_pow, Interval};
use crate::type1::{midpoint, SymbolicPowerMatrix};

pub const MIN_CUBE_DIM: usize = 2;
pub const MAX_CUBE_DIM: usize = 3;
pub const DEFAULT_MAX_CELLS: usize = 50_000;
pub const DEFAULT_CUBE_TOL: f64 = 1e-10;

/// Axis-aligned cube `Π_c [lower_c, lower_c + side]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cube<T> {
    lower: Vec<T>,
    side: T,
}

impl<T: Real> Cube<T> {
    pub fn new(lower: Vec<T>, side: T) -> Result<Self> {
        let d = lower.len();
        if !(MIN_CUBE_DIM..=MAX_CUBE_DIM).contains(&d) {
            return Err(Error::InvalidCube(format!("dimension {d} outside 2..=3")));
        }
        if !(side > T::zero() && side.is_finite()) || lower.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCube("side must be positive and corners finite".into()));
        }
        if lower.iter().any(|&c| !(c + side > c)) {
            return Err(Error::InvalidCube("side is below the resolution of the corner".into()));
        }
        Ok(Self { lower, side })
    }

    /// `[-h, h]^d`
    pub fn centered_at_origin(d: usize, half: T) -> Result<Self> {
        Self::new(vec![-half; d], half + half)
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[T] {
        &self.lower
    }

    pub fn side(&self) -> T {
        self.side
    }

    pub fn volume(&self) -> T {
        self.side.powi(self.dim() as i32)
    }

    pub fn interval(&self, c: usize) -> Interval<T> {
        Interval::new(self.lower[c], self.lower[c] + self.side).expect("validated at construction")
    }

    /// Closed containment of the origin.
    pub fn contains_origin(&self) -> bool {
        self.lower.iter().all(|&l| l <= T::zero() && T::zero() <= l + self.side)
    }

    /// Largest Euclidean norm over the cube, attained at a corner.
    pub fn max_norm(&self) -> T {
        self.lower
            .iter()
            .map(|&l| {
                let far = l.abs().max((l + self.side).abs());
                far * far
            })
            .sum::<T>()
            .sqrt()
    }

    /// The `2^d` half-side subcubes.
    pub fn children(&self) -> Vec<Cube<T>> {
        let d = self.dim();
        let half = self.side * T::lit(0.5);
        (0..1usize << d)
            .map(|mask| Cube {
                lower: (0..d)
                    .map(|c| {
                        if mask >> c & 1 == 1 {
                            self.lower[c] + half
                        } else {
                            self.lower[c]
                        }
                    })
                    .collect(),
                side: half,
            })
            .collect()
    }

    /// Same cube with its coordinates permuted.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Cube {
            lower: perm.iter().map(|&p| self.lower[p]).collect(),
            side: self.side,
        }
    }
}

fn check_square<T: Real>(coeff: &DenseMatrix<T>, m: &[Vec<Rational>]) -> Result<Vec<Rational>> {
    let n = coeff.dim();
    if m.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.len(),
        });
    }
    let mut flat = Vec::with_capacity(n * n);
    for row in m {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: row.len(),
            });
        }
        flat.extend_from_slice(row);
    }
    Ok(flat)
}

fn midpoint_fill(diag: &[Rational]) -> Vec<Rational> {
    diag.iter()
        .flat_map(|&gi| diag.iter().map(move |&gj| midpoint(gi, gj)))
        .collect()
}

/// Sets the exponent of every exactly-zero off-diagonal coefficient to its
/// midpoint value.
fn normalize_exponents<T: Real>(coeff: &DenseMatrix<T>, e: &mut [Rational]) {
    let n = coeff.dim();
    for i in 0..n {
        for j in 0..n {
            if i != j && coeff.get(i, j).is_zero() {
                e[i * n + j] = midpoint(e[i * n + i], e[j * n + j]);
            }
        }
    }
}

fn midpoint_findings(n: usize, e: &[Rational], coordinate: Option<usize>) -> Vec<Finding> {
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let expected = midpoint(e[i * n + i], e[j * n + j]);
            let actual = e[i * n + j];
            if actual != expected {
                out.push(Finding::MidpointViolated {
                    i,
                    j,
                    coordinate,
                    expected,
                    actual,
                });
            }
        }
    }
    out
}

fn range_findings(n: usize, e: &[Rational], bound: Rational, coordinate: Option<usize>) -> (Vec<Finding>, bool) {
    let mut out = Vec::new();
    let mut non_integrable = false;
    for i in 0..n {
        let g = e[i * n + i];
        if !(-bound < g && g < bound) {
            non_integrable |= g <= -bound;
            out.push(Finding::DiagonalExponentOutOfRange {
                i,
                coordinate,
                exponent: g,
                lower: -bound,
                upper: bound,
            });
        }
    }
    (out, non_integrable)
}

/// Folds the structural findings of a multivariable weight into the
/// verdict of its one-variable restriction.
fn combine(
    mut report: A2Report<f64>,
    midpoint: Vec<Finding>,
    range: Vec<Finding>,
    non_integrable: bool,
) -> A2Report<f64> {
    let midpoint_failed = !midpoint.is_empty();
    report.reasons.extend(midpoint);
    match report.verdict {
        Verdict::PositiveDefiniteAe | Verdict::A2 if midpoint_failed => {
            report.verdict = Verdict::NotPositiveDefiniteAe;
        }
        Verdict::PositiveDefiniteAe | Verdict::A2 => {
            report.verdict = if range.is_empty() {
                Verdict::A2
            } else if non_integrable {
                Verdict::NotLocallyIntegrable
            } else {
                Verdict::NotA2
            };
        }
        _ => {}
    }
    report.reasons.extend(range);
    report
}

fn retag<T>(r: A2Report<T>) -> A2Report<f64>
where
    T: Real,
{
    A2Report {
        verdict: r.verdict,
        reasons: r.reasons,
        witness: r.witness.map(|w| w.to_f64_lossy()),
        notes: r.notes,
    }
}

fn untag<T: Real>(r: A2Report<f64>) -> A2Report<T> {
    A2Report {
        verdict: r.verdict,
        reasons: r.reasons,
        witness: r.witness.map(T::lit),
        notes: r.notes,
    }
}

/// Separable weight with entries `a_ij Π_c |x_c|^{γ_ij,c}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Type1aWeight<T> {
    coeff: DenseMatrix<T>,
    /// One row-major `n × n` exponent matrix per coordinate.
    exponents: Vec<Vec<Rational>>,
}

impl<T: Real> Type1aWeight<T> {
    pub fn new(coeff: DenseMatrix<T>, exponents: &[Vec<Vec<Rational>>]) -> Result<Self> {
        let d = exponents.len();
        if !(MIN_CUBE_DIM..=MAX_CUBE_DIM).contains(&d) {
            return Err(Error::InvalidCube(format!("dimension {d} outside 2..=3")));
        }
        let exponents = exponents
            .iter()
            .map(|m| check_square(&coeff, m))
            .collect::<Result<_>>()?;
        Ok(Self { coeff, exponents })
    }

    /// Fills each coordinate's exponent matrix from its diagonal by the
    /// midpoint rule.
    pub fn from_diagonals(coeff: DenseMatrix<T>, diagonals: &[Vec<Rational>]) -> Result<Self> {
        let d = diagonals.len();
        if !(MIN_CUBE_DIM..=MAX_CUBE_DIM).contains(&d) {
            return Err(Error::InvalidCube(format!("dimension {d} outside 2..=3")));
        }
        let n = coeff.dim();
        if let Some(bad) = diagonals.iter().find(|g| g.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let exponents = diagonals.iter().map(|g| midpoint_fill(g)).collect();
        Ok(Self { coeff, exponents })
    }

    pub fn dim(&self) -> usize {
        self.coeff.dim()
    }

    pub fn space_dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn coeff(&self) -> &DenseMatrix<T> {
        &self.coeff
    }

    pub fn exponent(&self, coordinate: usize, i: usize, j: usize) -> Rational {
        self.exponents[coordinate][i * self.dim() + j]
    }

    fn normalized(&self) -> Self {
        let mut out = self.clone();
        for e in &mut out.exponents {
            normalize_exponents(&self.coeff, e);
        }
        out
    }

    /// The one-variable weight seen along the first coordinate axis with the
    /// other coordinates equal to 1.
    fn restriction(&self) -> SymbolicPowerMatrix<T> {
        let n = self.dim();
        let rows: Vec<Vec<Rational>> = self.exponents[0].chunks(n).map(|r| r.to_vec()).collect();
        SymbolicPowerMatrix::build_type1_raw(self.coeff.clone(), &rows).expect("square by construction")
    }

    pub fn evaluate(&self, x: &[T]) -> Result<DenseMatrix<T>> {
        if x.len() != self.space_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.space_dim(),
                found: x.len(),
            });
        }
        let n = self.dim();
        let mut out = self.coeff.clone();
        for (c, &xc) in x.iter().enumerate() {
            for k in 0..n * n {
                let e = self.exponents[c][k];
                if e.is_zero() {
                    continue;
                }
                if xc.is_zero() && e < Rational::zero() {
                    return Err(Error::EvaluationAtOrigin);
                }
                let v = out.get(k / n, k % n) * xc.abs().powf(rational_to(e));
                out.set(k / n, k % n, v);
            }
        }
        Ok(out)
    }

    /// A₂ over cubes: coefficient matrix positive definite, and for every
    /// coordinate the exact midpoint condition with diagonal exponents in
    /// `(-1, 1)`.
    pub fn check_a2(&self) -> A2Report<T> {
        let w = self.normalized();
        let mut report = retag(w.restriction().check_a2());
        for f in &mut report.reasons {
            set_coordinate(f, 0);
        }
        let n = w.dim();
        let mut midpoint = Vec::new();
        let mut range = Vec::new();
        let mut non_integrable = false;
        for c in 1..w.space_dim() {
            midpoint.extend(midpoint_findings(n, &w.exponents[c], Some(c)));
            let (r, ni) = range_findings(n, &w.exponents[c], Rational::one(), Some(c));
            range.extend(r);
            non_integrable |= ni;
        }
        if report.witness.is_some() {
            report
                .notes
                .push("witness is the first coordinate, with every other coordinate equal to 1".into());
        }
        untag(combine(report, midpoint, range, non_integrable))
    }

    /// `(det A, exponents)` with `det W(x) = det A · Π_c |x_c|^{exponents_c}`.
    pub fn symbolic_det(&self) -> Result<(Complex<T>, Vec<Rational>)> {
        let w = self.normalized();
        let n = w.dim();
        for (c, e) in w.exponents.iter().enumerate() {
            if let Some(Finding::MidpointViolated { i, j, .. }) = midpoint_findings(n, e, Some(c)).first() {
                return Err(Error::MidpointViolated { i: *i, j: *j });
            }
        }
        let exps = w.exponents.iter().map(|e| (0..n).map(|k| e[k * n + k]).sum()).collect();
        Ok((lu_det(&w.coeff), exps))
    }

    /// Coefficients `c_ji / det A` with every exponent negated.
    pub fn inverse(&self) -> Result<Self> {
        let report = self.check_a2();
        if !matches!(report.verdict, Verdict::A2 | Verdict::NotA2) {
            return Err(Error::Precondition(format!(
                "inverse requires a positive definite weight, verdict was {}",
                report.verdict
            )));
        }
        let w = self.normalized();
        let inv = w.restriction().symbolic_inverse()?;
        Ok(Self {
            coeff: inv.effective_coeff(),
            exponents: w.exponents.iter().map(|e| e.iter().map(|&g| -g).collect()).collect(),
        })
    }
}

fn set_coordinate(f: &mut Finding, c: usize) {
    match f {
        Finding::MidpointViolated { coordinate, .. } | Finding::DiagonalExponentOutOfRange { coordinate, .. } => {
            *coordinate = Some(c)
        }
        _ => {}
    }
}

/// Entrywise cube average `a_ij Π_c ⟨|x_c|^{γ_ij,c}⟩_{I_c}`.
pub fn average_type1a<T: Real>(w: &Type1aWeight<T>, q: &Cube<T>) -> Result<SelfAdjointMatrix<T>> {
    if q.dim() != w.space_dim() {
        return Err(Error::DimensionMismatch {
            expected: w.space_dim(),
            found: q.dim(),
        });
    }
    let n = w.dim();
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let a = w.coeff.get(i, j);
            if a.is_zero() {
                continue;
            }
            let mut factor = T::one();
            for c in 0..q.dim() {
                let e = w.exponent(c, i, j);
                factor = factor
                    * average_abs_pow(e, &q.interval(c)).map_err(|_| Error::NonIntegrableEntry {
                        i,
                        j,
                        exponent: e,
                    })?;
            }
            out.set(i, j, a * factor);
        }
    }
    Ok(SelfAdjointMatrix::symmetrized(&out))
}

/// Radial weight with entries `a_ij ‖x‖^{γ_ij}` on `R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Type1bWeight<T> {
    coeff: DenseMatrix<T>,
    exponents: Vec<Rational>,
    d: usize,
}

impl<T: Real> Type1bWeight<T> {
    pub fn new(coeff: DenseMatrix<T>, exponents: &[Vec<Rational>], d: usize) -> Result<Self> {
        if !(MIN_CUBE_DIM..=MAX_CUBE_DIM).contains(&d) {
            return Err(Error::InvalidCube(format!("dimension {d} outside 2..=3")));
        }
        let exponents = check_square(&coeff, exponents)?;
        Ok(Self { coeff, exponents, d })
    }

    pub fn from_diagonal(coeff: DenseMatrix<T>, diagonal: &[Rational], d: usize) -> Result<Self> {
        if diagonal.len() != coeff.dim() {
            return Err(Error::DimensionMismatch {
                expected: coeff.dim(),
                found: diagonal.len(),
            });
        }
        let rows: Vec<Vec<Rational>> = midpoint_fill(diagonal)
            .chunks(coeff.dim())
            .map(|r| r.to_vec())
            .collect();
        Self::new(coeff, &rows, d)
    }

    pub fn dim(&self) -> usize {
        self.coeff.dim()
    }

    pub fn space_dim(&self) -> usize {
        self.d
    }

    pub fn coeff(&self) -> &DenseMatrix<T> {
        &self.coeff
    }

    pub fn exponent(&self, i: usize, j: usize) -> Rational {
        self.exponents[i * self.dim() + j]
    }

    fn normalized(&self) -> Self {
        let mut out = self.clone();
        normalize_exponents(&self.coeff, &mut out.exponents);
        out
    }

    /// The weight as a function of `r = ‖x‖`.
    fn restriction(&self) -> SymbolicPowerMatrix<T> {
        let n = self.dim();
        let rows: Vec<Vec<Rational>> = self.exponents.chunks(n).map(|r| r.to_vec()).collect();
        SymbolicPowerMatrix::build_type1_raw(self.coeff.clone(), &rows).expect("square by construction")
    }

    pub fn evaluate(&self, x: &[T]) -> Result<DenseMatrix<T>> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: x.len(),
            });
        }
        let r = x.iter().map(|&v| v * v).sum::<T>().sqrt();
        if r.is_zero() && self.exponents.iter().any(|&e| e < Rational::zero()) {
            return Err(Error::EvaluationAtOrigin);
        }
        self.restriction().evaluate(r).or_else(|_| {
            // r = 0 with non-negative exponents
            let n = self.dim();
            Ok(DenseMatrix::from_fn(n, |i, j| {
                if self.exponent(i, j).is_zero() {
                    self.coeff.get(i, j)
                } else {
                    Complex::zero()
                }
            }))
        })
    }

    /// A₂ over cubes: coefficient matrix positive definite, exact midpoint
    /// condition, and diagonal exponents in `(-d, d)`.
    pub fn check_a2(&self) -> A2Report<T> {
        let w = self.normalized();
        let mut report = w.restriction().check_positive_definite_ae();
        let bound = Rational::from_integer(w.d as i64);
        let (range, non_integrable) = range_findings(w.dim(), &w.exponents, bound, None);
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
        if report.witness.is_some() {
            report.notes.push("witness is the radius ‖x‖".into());
        }
        report
    }

    /// `(det A, Σ_k γ_kk)` with `det W(x) = det A · ‖x‖^{Σ_k γ_kk}`.
    pub fn symbolic_det(&self) -> Result<(Complex<T>, Rational)> {
        self.restriction().symbolic_det()
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self.normalized().restriction().symbolic_inverse()?;
        Ok(Self {
            coeff: inv.effective_coeff(),
            exponents: inv.exponent_rows().concat(),
            d: self.d,
        })
    }
}

/// Surface area of the unit sphere in `R^d`.
fn sphere_area<T: Real>(d: usize) -> T {
    match d {
        2 => T::lit(2.0) * T::PI(),
        3 => T::lit(4.0) * T::PI(),
        _ => unreachable!("cube dimension is validated"),
    }
}

struct Cell<T> {
    cube: Cube<T>,
    value: T,
    error: T,
    seq: usize,
}

impl<T: Real> PartialEq for Cell<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<T: Real> Eq for Cell<T> {}
impl<T: Real> PartialOrd for Cell<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Cell<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Integral of `‖x‖^γ` over a cube by adaptive subdivision.
///
/// Cells away from the origin use an order-8 tensor Gauss rule with the
/// order-4 rule as error estimate. A cell containing the origin is enclosed
/// in the ball of radius `R` (its largest corner norm); the integral over
/// the cell lies in `[0, ω_d R^{γ+d}/(γ+d)]`, and the midpoint of that range
/// is used with half its width as error. The worst cell is split into `2^d`
/// children until the total error of the average is at most
/// `tol · (1 + |average|)`.
pub fn integrate_radial_power<T: Real>(gamma: Rational, q: &Cube<T>, tol: T, max_cells: usize) -> Result<(T, T)> {
    let d = q.dim();
    if gamma.is_zero() {
        return Ok((q.volume(), T::zero()));
    }
    let exponent_d = gamma + Rational::from_integer(d as i64);
    if q.contains_origin() && exponent_d <= Rational::zero() {
        return Err(Error::NonIntegrable { exponent: gamma });
    }
    let g: T = rational_to(gamma);
    let gd: T = rational_to(exponent_d);
    let omega = sphere_area::<T>(d);
    let f = |x: &[T]| x.iter().map(|&v| v * v).sum::<T>().powf(g * T::lit(0.5));
    let assess = |cube: Cube<T>, seq: usize| -> Cell<T> {
        if cube.contains_origin() {
            let half = omega * cube.max_norm().powf(gd) / gd * T::lit(0.5);
            Cell {
                cube,
                value: half,
                error: half,
                seq,
            }
        } else {
            let hi = tensor_gauss(&f, cube.lower(), cube.side(), &GL8);
            let lo = tensor_gauss(&f, cube.lower(), cube.side(), &GL4);
            Cell {
                cube,
                value: hi,
                error: (hi - lo).abs(),
                seq,
            }
        }
    };

    let vol = q.volume();
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    let first = assess(q.clone(), seq);
    let (mut total, mut err) = (first.value, first.error);
    heap.push(first);
    let mut cells = 1;
    loop {
        if err <= tol * (vol + total.abs()) {
            // re-sum to shed accumulated rounding in the running totals
            total = heap.iter().map(|c| c.value).sum();
            err = heap.iter().map(|c| c.error).sum();
            if err <= tol * (vol + total.abs()) {
                return Ok((total, err));
            }
        }
        if cells + (1 << d) > max_cells {
            return Err(Error::QuadratureBudgetExceeded { panels: cells });
        }
        let worst = heap.pop().expect("heap is never empty");
        total = total - worst.value;
        err = err - worst.error;
        cells -= 1;
        for child in worst.cube.children() {
            seq += 1;
            let cell = assess(child, seq);
            total = total + cell.value;
            err = err + cell.error;
            heap.push(cell);
            cells += 1;
        }
    }
}

/// Entrywise cube average of a radial weight by [`integrate_radial_power`],
/// one quadrature per distinct exponent.
pub fn average_type1b<T: Real>(
    w: &Type1bWeight<T>,
    q: &Cube<T>,
    tol: T,
    max_cells: usize,
) -> Result<SelfAdjointMatrix<T>> {
    if q.dim() != w.space_dim() {
        return Err(Error::DimensionMismatch {
            expected: w.space_dim(),
            found: q.dim(),
        });
    }
    let n = w.dim();
    let vol = q.volume();
    let mut cache: BTreeMap<Rational, T> = BTreeMap::new();
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let a = w.coeff.get(i, j);
            if a.is_zero() {
                continue;
            }
            let e = w.exponent(i, j);
            let avg = match cache.get(&e) {
                Some(&v) => v,
                None => {
                    let (integral, _) = integrate_radial_power(e, q, tol, max_cells).map_err(|err| match err {
                        Error::NonIntegrable { .. } => Error::NonIntegrableEntry { i, j, exponent: e },
                        other => other,
                    })?;
                    let v = integral / vol;
                    cache.insert(e, v);
                    v
                }
            };
            out.set(i, j, a * avg);
        }
    }
    Ok(SelfAdjointMatrix::symmetrized(&out))
}

/// A weight whose averages, and those of its inverse, can be taken over
/// cubes.
pub trait CubeAverages<T: Real>: Sync {
    fn dim(&self) -> usize;
    fn space_dim(&self) -> usize;
    fn average(&self, q: &Cube<T>) -> Result<SelfAdjointMatrix<T>>;
    fn average_inverse(&self, q: &Cube<T>) -> Result<SelfAdjointMatrix<T>>;
}

fn require_a2<T: Real>(report: &A2Report<T>) -> Result<()> {
    if report.verdict == Verdict::A2 {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "cube estimates require an A2 weight, verdict was {}",
            report.verdict
        )))
    }
}

pub struct Type1aAverager<T> {
    weight: Type1aWeight<T>,
    inverse: Type1aWeight<T>,
}

impl<T: Real> Type1aAverager<T> {
    pub fn new(weight: &Type1aWeight<T>) -> Result<Self> {
        require_a2(&weight.check_a2())?;
        Ok(Self {
            weight: weight.normalized(),
            inverse: weight.inverse()?,
        })
    }
}

impl<T: Real> CubeAverages<T> for Type1aAverager<T> {
    fn dim(&self) -> usize {
        self.weight.dim()
    }
    fn space_dim(&self) -> usize {
        self.weight.space_dim()
    }
    fn average(&self, q: &Cube<T>) -> Result<SelfAdjointMatrix<T>> {
        average_type1a(&self.weight, q)
    }
    fn average_inverse(&self, q: &Cube<T>) -> Result<SelfAdjointMatrix<T>> {
        average_type1a(&self.inverse, q)
    }
}

pub struct Type1bAverager<T> {
    weight: Type1bWeight<T>,
    inverse: Type1bWeight<T>,
    tol: T,
    max_cells: usize,
}

impl<T: Real> Type1bAverager<T> {
    pub fn new(weight: &Type1bWeight<T>, tol: T, max_cells: usize) -> Result<Self> {
        require_a2(&weight.check_a2())?;
        Ok(Self {
            weight: weight.normalized(),
            inverse: weight.inverse()?,
            tol,
            max_cells,
        })
    }
}

impl<T: Real> CubeAverages<T> for Type1bAverager<T> {
    fn dim(&self) -> usize {
        self.weight.dim()
    }
    fn space_dim(&self) -> usize {
        self.weight.space_dim()
    }
    fn average(&self, q: &Cube<T>) -> Result<SelfAdjointMatrix<T>> {
        average_type1b(&self.weight, q, self.tol, self.max_cells)
    }
    fn average_inverse(&self, q: &Cube<T>) -> Result<SelfAdjointMatrix<T>> {
        average_type1b(&self.inverse, q, self.tol, self.max_cells)
    }
}

/// Candidate cubes have side `s` from `sides` and lower corner `s · t` for
/// offset vectors `t`. Offsets come from the Cartesian power of
/// `offset_fractions` plus the two fixed families: `t = 0` (cornered at the
/// origin) and `t = -1/2` (centered at the origin). Both weight types are
/// even in every coordinate, so one orthant represents all cornered cubes.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeSearchConfig<T> {
    pub sides: Vec<T>,
    pub offset_fractions: Vec<T>,
    pub origin_cornered: bool,
    pub origin_centered: bool,
    /// Golden-section rounds over log-side and each offset coordinate.
    pub refine_rounds: usize,
    pub quadrature_tol: T,
    pub max_cells: usize,
}

const CUBE_GOLDEN_ITERS: usize = 20;

impl<T: Real> CubeSearchConfig<T> {
    pub fn fine() -> Self {
        Self {
            sides: logspace(T::lit(1e-2), T::lit(1e2), 9),
            offset_fractions: [-2.0, -0.9, -0.7, -0.3, -0.1, 0.5, 2.0]
                .iter()
                .map(|&v| T::lit(v))
                .collect(),
            origin_cornered: true,
            origin_centered: true,
            refine_rounds: 4,
            quadrature_tol: T::tol(1e-9),
            max_cells: DEFAULT_MAX_CELLS,
        }
    }

    pub fn coarse() -> Self {
        Self {
            sides: vec![T::one()],
            offset_fractions: [-0.9, -0.7, -0.3, -0.1].iter().map(|&v| T::lit(v)).collect(),
            refine_rounds: 2,
            quadrature_tol: T::tol(1e-7),
            ..Self::fine()
        }
    }

    /// Only the fixed families, with no refinement.
    pub fn anchored(sides: Vec<T>, origin_cornered: bool, origin_centered: bool) -> Self {
        Self {
            sides,
            offset_fractions: Vec::new(),
            origin_cornered,
            origin_centered,
            refine_rounds: 0,
            ..Self::fine()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sides.is_empty() || self.sides.iter().any(|&s| !(s > T::zero() && s.is_finite())) {
            return Err(Error::InvalidConfig(
                "sides must be nonempty, positive and finite".into(),
            ));
        }
        if self.offset_fractions.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidConfig("offset fractions must be finite".into()));
        }
        if self.offset_fractions.is_empty() && !self.origin_cornered && !self.origin_centered {
            return Err(Error::InvalidConfig("no candidate cube family selected".into()));
        }
        if !(self.quadrature_tol > T::zero()) {
            return Err(Error::InvalidConfig("quadrature tolerance must be positive".into()));
        }
        Ok(())
    }

    fn offsets(&self, d: usize) -> Vec<Vec<T>> {
        let mut out = Vec::new();
        if self.origin_cornered {
            out.push(vec![T::zero(); d]);
        }
        if self.origin_centered {
            out.push(vec![T::lit(-0.5); d]);
        }
        let k = self.offset_fractions.len();
        for idx in 0..k.pow(d as u32) {
            let mut rem = idx;
            let t: Vec<T> = (0..d)
                .map(|_| {
                    let v = self.offset_fractions[rem % k];
                    rem /= k;
                    v
                })
                .collect();
            if !out.contains(&t) {
                out.push(t);
            }
        }
        out
    }

    fn log_step(&self) -> T {
        let mut s = self.sides.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        let step = s
            .windows(2)
            .map(|w| (w[1] / w[0]).ln())
            .fold(T::zero(), |m, v| m.max(v));
        if step > T::zero() {
            step
        } else {
            T::lit(2.0).ln()
        }
    }
}

impl<T: Real> Default for CubeSearchConfig<T> {
    fn default() -> Self {
        Self::fine()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CubeSearchResult<T> {
    pub estimate: T,
    pub argmax: Cube<T>,
    pub functional: Functional,
    pub evaluations: usize,
    pub grid_evaluations: usize,
    pub grid_estimate: T,
    pub skipped: usize,
}

pub fn evaluate_cube_functional<T: Real, W: CubeAverages<T> + ?Sized>(
    weight: &W,
    functional: Functional,
    q: &Cube<T>,
) -> Result<T> {
    let avg = weight.average(q)?;
    let avg_inv = weight.average_inverse(q)?;
    match functional {
        Functional::Trace => a2_functional_trace(&avg, &avg_inv),
        Functional::Norm => a2_functional_norm(&avg, &avg_inv),
    }
}

fn cube_at<T: Real>(side: T, offset: &[T]) -> Result<Cube<T>> {
    Cube::new(offset.iter().map(|&t| t * side).collect(), side)
}

/// Sup of the functional over the configured cubes; a lower bound for the
/// A₂ characteristic over cubes. The grid is evaluated in parallel and
/// reduced in grid order, then refined by golden-section passes over
/// log-side and over each offset coordinate.
pub fn estimate_a2_cubes<T: Real, W: CubeAverages<T>>(
    weight: &W,
    functional: Functional,
    cfg: &CubeSearchConfig<T>,
) -> Result<CubeSearchResult<T>> {
    cfg.validate()?;
    let d = weight.space_dim();
    let offsets = cfg.offsets(d);
    let candidates: Vec<(T, &Vec<T>)> = cfg
        .sides
        .iter()
        .flat_map(|&s| offsets.iter().map(move |t| (s, t)))
        .collect();
    let values: Vec<Option<Result<T>>> = candidates
        .par_iter()
        .map(|&(s, t)| {
            cube_at(s, t)
                .ok()
                .map(|q| evaluate_cube_functional(weight, functional, &q))
        })
        .collect();

    let mut best: Option<(usize, T)> = None;
    let mut skipped = 0;
    for (k, v) in values.into_iter().enumerate() {
        match v {
            None => skipped += 1,
            Some(Err(e)) => return Err(e),
            Some(Ok(v)) => {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((k, v));
                }
            }
        }
    }
    let (k, grid_estimate) = best.ok_or_else(|| Error::InvalidConfig("no representable candidate cube".into()))?;
    let grid_evaluations = candidates.len() - skipped;

    struct State<T> {
        value: T,
        side: T,
        offset: Vec<T>,
        evaluations: usize,
        error: Option<Error>,
    }
    let state = RefCell::new(State {
        value: grid_estimate,
        side: candidates[k].0,
        offset: candidates[k].1.clone(),
        evaluations: grid_evaluations,
        error: None,
    });
    let probe = |s: T, t: &[T]| -> T {
        let Ok(q) = cube_at(s, t) else {
            return T::neg_infinity();
        };
        let outcome = evaluate_cube_functional(weight, functional, &q);
        let mut st = state.borrow_mut();
        st.evaluations += 1;
        match outcome {
            Ok(v) if v.is_finite() => {
                if v > st.value {
                    st.value = v;
                    st.side = s;
                    st.offset = t.to_vec();
                }
                v
            }
            Ok(_) => T::neg_infinity(),
            Err(e) => {
                st.error.get_or_insert(e);
                T::neg_infinity()
            }
        }
    };

    let step = cfg.log_step();
    let half = T::lit(0.5);
    for _ in 0..cfg.refine_rounds {
        let (s0, t0) = {
            let st = state.borrow();
            (st.side, st.offset.clone())
        };
        let y0 = s0.ln();
        golden_section_max(&|y: T| probe(y.exp(), &t0), y0 - step, y0 + step, CUBE_GOLDEN_ITERS);
        for c in 0..d {
            let (s1, t1) = {
                let st = state.borrow();
                (st.side, st.offset.clone())
            };
            let line = |v: T| {
                let mut t = t1.clone();
                t[c] = v;
                probe(s1, &t)
            };
            golden_section_max(&line, t1[c] - half, t1[c] + half, CUBE_GOLDEN_ITERS);
        }
        if let Some(e) = state.borrow_mut().error.take() {
            return Err(e);
        }
    }

    let st = state.into_inner();
    Ok(CubeSearchResult {
        estimate: st.value,
        argmax: cube_at(st.side, &st.offset)?,
        functional,
        evaluations: st.evaluations,
        grid_evaluations,
        grid_estimate,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn coeff53() -> DenseMatrix<f64> {
        DenseMatrix::from_real_rows(&[vec![5.0, 3.0], vec![3.0, 2.0]]).unwrap()
    }

    fn scalar_1a(g: Rational, b: Rational) -> Type1aWeight<f64> {
        Type1aWeight::from_diagonals(DenseMatrix::identity(1), &[vec![g], vec![b]]).unwrap()
    }

    fn scalar_1b(g: Rational, d: usize) -> Type1bWeight<f64> {
        Type1bWeight::from_diagonal(DenseMatrix::identity(1), &[g], d).unwrap()
    }

    #[test]
    fn cube_invariants() {
        assert!(Cube::new(vec![0.0], 1.0).is_err());
        assert!(Cube::new(vec![0.0; 4], 1.0).is_err());
        assert!(Cube::new(vec![0.0; 2], 0.0).is_err());
        assert!(Cube::new(vec![1e20, 0.0], 1e-10).is_err());
        let q = Cube::new(vec![-1.0, 0.0, 2.0], 2.0).unwrap();
        assert!(!q.contains_origin());
        assert_eq!(q.volume(), 8.0);
        assert_eq!(q.children().len(), 8);
        assert!((q.max_norm() - (1.0f64 + 4.0 + 16.0).sqrt()).abs() < 1e-15);
        assert!(Cube::centered_at_origin(2, 1.0).unwrap().contains_origin());
        assert!(Cube::new(vec![0.0, 0.0], 1.0).unwrap().contains_origin());
    }

    #[test]
    fn type1a_decisions() {
        let ok = Type1aWeight::from_diagonals(coeff53(), &[vec![r(1, 2), r(-2, 3)], vec![r(0, 1), r(0, 1)]]).unwrap();
        assert_eq!(ok.check_a2().verdict, Verdict::A2);
        let bad = Type1aWeight::from_diagonals(coeff53(), &[vec![r(1, 2), r(-2, 3)], vec![r(1, 1), r(0, 1)]]).unwrap();
        let rep = bad.check_a2();
        assert_eq!(rep.verdict, Verdict::NotA2);
        assert!(matches!(
            rep.reasons[0],
            Finding::DiagonalExponentOutOfRange {
                i: 0,
                coordinate: Some(1),
                ..
            }
        ));
        for (a, want) in [(2.0, Verdict::A2), (-1.0, Verdict::NotPositiveDefiniteAe)] {
            let w = Type1aWeight::from_diagonals(DenseMatrix::diagonal(&[a]), &[vec![r(0, 1)], vec![r(0, 1)]]).unwrap();
            assert_eq!(w.check_a2().verdict, want);
        }
        let raw = Type1aWeight::new(
            coeff53(),
            &[
                vec![vec![r(0, 1); 2]; 2],
                vec![vec![r(0, 1), r(1, 3)], vec![r(1, 3), r(0, 1)]],
            ],
        )
        .unwrap();
        let rep = raw.check_a2();
        assert_eq!(rep.verdict, Verdict::NotPositiveDefiniteAe);
        assert!(matches!(
            rep.reasons[0],
            Finding::MidpointViolated {
                coordinate: Some(1),
                ..
            }
        ));
    }

    #[test]
    fn type1a_reduces_to_one_variable() {
        for diag in [[r(1, 2), r(-2, 3)], [r(1, 1), r(0, 1)], [r(-1, 1), r(1, 2)]] {
            let w1 = SymbolicPowerMatrix::build_type1(coeff53(), &diag).unwrap();
            let w2 = Type1aWeight::from_diagonals(coeff53(), &[diag.to_vec(), vec![r(0, 1); 2]]).unwrap();
            assert_eq!(w1.check_a2().verdict, w2.check_a2().verdict);
        }
    }

    #[test]
    fn type1b_decisions() {
        let w = Type1bWeight::from_diagonal(coeff53(), &[r(3, 2), r(-3, 2)], 2).unwrap();
        assert_eq!(w.check_a2().verdict, Verdict::A2);
        let w = Type1bWeight::from_diagonal(coeff53(), &[r(2, 1), r(0, 1)], 2).unwrap();
        assert_eq!(w.check_a2().verdict, Verdict::NotA2);
        assert_eq!(scalar_1b(r(-5, 2), 3).check_a2().verdict, Verdict::A2);
        let neg = Type1bWeight::from_diagonal(DenseMatrix::diagonal(&[-1.0]), &[r(-5, 2)], 3).unwrap();
        assert_eq!(neg.check_a2().verdict, Verdict::NotPositiveDefiniteAe);
        assert_eq!(scalar_1b(r(-3, 1), 3).check_a2().verdict, Verdict::NotLocallyIntegrable);
    }

    #[test]
    fn symbolic_dets_match_evaluation() {
        let w = Type1aWeight::from_diagonals(coeff53(), &[vec![r(1, 2), r(-2, 3)], vec![r(1, 4), r(1, 3)]]).unwrap();
        let (det, exps) = w.symbolic_det().unwrap();
        assert_eq!(exps, vec![r(-1, 6), r(7, 12)]);
        let x = [0.7, 3.1];
        let direct = lu_det(&w.evaluate(&x).unwrap());
        let formula = det.re * 0.7f64.powf(-1.0 / 6.0) * 3.1f64.powf(7.0 / 12.0);
        assert!((direct.re - formula).abs() < 1e-12 * formula.abs());

        let w = Type1bWeight::from_diagonal(coeff53(), &[r(3, 2), r(-1, 2)], 3).unwrap();
        let (det, e) = w.symbolic_det().unwrap();
        assert_eq!(e, r(1, 1));
        let x = [0.3, -1.2, 2.0];
        let rad = (0.09f64 + 1.44 + 4.0).sqrt();
        let direct = lu_det(&w.evaluate(&x).unwrap());
        assert!((direct.re - det.re * rad).abs() < 1e-12);
    }

    #[test]
    fn inverses_multiply_to_identity() {
        let w = Type1aWeight::from_diagonals(coeff53(), &[vec![r(1, 2), r(-2, 3)], vec![r(1, 4), r(1, 3)]]).unwrap();
        let inv = w.inverse().unwrap();
        let x = [1.7, -0.4];
        let p = w.evaluate(&x).unwrap().matmul(&inv.evaluate(&x).unwrap());
        assert!(p.max_abs_diff(&DenseMatrix::identity(2)) < 1e-12);
        let w = Type1bWeight::from_diagonal(coeff53(), &[r(3, 2), r(-1, 2)], 2).unwrap();
        let inv = w.inverse().unwrap();
        let x = [0.2, 5.0];
        let p = w.evaluate(&x).unwrap().matmul(&inv.evaluate(&x).unwrap());
        assert!(p.max_abs_diff(&DenseMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn separable_averages() {
        let w = scalar_1a(r(1, 2), r(1, 2));
        let q = Cube::new(vec![0.0, 0.0], 1.0).unwrap();
        assert!((average_type1a(&w, &q).unwrap().get(0, 0).re - 4.0 / 9.0).abs() < 1e-15);
        let big = Cube::centered_at_origin(2, 1.0).unwrap();
        let a = average_type1a(&w, &big).unwrap().get(0, 0).re;
        assert!((a - 4.0 / 9.0).abs() < 1e-15);
        let id = Type1aWeight::from_diagonals(DenseMatrix::identity(2), &[vec![r(0, 1); 2], vec![r(0, 1); 2]]).unwrap();
        let q = Cube::new(vec![3.0, -7.0], 0.1).unwrap();
        assert!(average_type1a(&id, &q).unwrap().max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
        let sing = scalar_1a(r(-1, 1), r(0, 1));
        assert!(matches!(
            average_type1a(&sing, &big),
            Err(Error::NonIntegrableEntry { .. })
        ));
    }

    #[test]
    fn radial_linear_power_on_unit_square() {
        let w = scalar_1b(r(1, 1), 2);
        let q = Cube::new(vec![0.0, 0.0], 1.0).unwrap();
        let v = average_type1b(&w, &q, 1e-10, DEFAULT_MAX_CELLS).unwrap().get(0, 0).re;
        let exact = (2f64.sqrt() + (1.0 + 2f64.sqrt()).ln()) / 3.0;
        assert!((v - exact).abs() < 1e-6, "{v} vs {exact}");
    }

    #[test]
    fn radial_inverse_power_across_origin() {
        let w = scalar_1b(r(-1, 1), 2);
        let q = Cube::centered_at_origin(2, 1.0).unwrap();
        let v = average_type1b(&w, &q, 1e-9, DEFAULT_MAX_CELLS).unwrap().get(0, 0).re;
        let exact = 2.0 * (1.0 + 2f64.sqrt()).ln();
        assert!((v - exact).abs() < 1e-7, "{v} vs {exact}");
        assert!(matches!(
            average_type1b(&scalar_1b(r(-2, 1), 2), &q, 1e-9, DEFAULT_MAX_CELLS),
            Err(Error::NonIntegrableEntry { .. })
        ));
    }

    #[test]
    fn radial_zero_exponent_is_coefficient() {
        let w = Type1bWeight::from_diagonal(coeff53(), &[r(0, 1), r(0, 1)], 3).unwrap();
        let q = Cube::new(vec![-0.3, 0.1, -2.0], 4.0).unwrap();
        let avg = average_type1b(&w, &q, 1e-10, DEFAULT_MAX_CELLS).unwrap();
        assert_eq!(avg.as_matrix(), &coeff53());
    }

    #[test]
    fn radial_dilation_law() {
        let g = r(1, 2);
        let w = scalar_1b(g, 3);
        let unit = average_type1b(&w, &Cube::centered_at_origin(3, 1.0).unwrap(), 1e-10, DEFAULT_MAX_CELLS).unwrap();
        let scaled = average_type1b(&w, &Cube::centered_at_origin(3, 4.0).unwrap(), 1e-10, DEFAULT_MAX_CELLS).unwrap();
        let ratio = scaled.get(0, 0).re / unit.get(0, 0).re;
        assert!((ratio - 2.0).abs() < 1e-6 * 2.0);
    }

    #[test]
    fn cell_budget_is_enforced() {
        let w = scalar_1b(r(-19, 10), 2);
        let q = Cube::centered_at_origin(2, 1.0).unwrap();
        assert!(matches!(
            average_type1b(&w, &q, 1e-12, 100),
            Err(Error::QuadratureBudgetExceeded { .. })
        ));
    }

    #[test]
    fn cornered_separable_product() {
        let w = scalar_1a(r(1, 2), r(1, 2));
        let avg = Type1aAverager::new(&w).unwrap();
        let cfg = CubeSearchConfig::anchored(logspace(1e-2, 1e2, 5), true, false);
        let res = estimate_a2_cubes(&avg, Functional::Trace, &cfg).unwrap();
        assert!((res.estimate - 16.0 / 9.0).abs() < 1e-12);
        // straddling cubes reach the product of the one-variable suprema
        let res = estimate_a2_cubes(&avg, Functional::Trace, &CubeSearchConfig::fine()).unwrap();
        assert!(
            res.estimate > 16.0 / 9.0 && res.estimate <= 2.25 + 1e-9,
            "{}",
            res.estimate
        );
        assert!(res.estimate > 2.2, "{}", res.estimate);
    }

    #[test]
    fn identity_is_flat_on_cubes() {
        let w = Type1bWeight::from_diagonal(DenseMatrix::<f64>::identity(2), &[r(0, 1); 2], 2).unwrap();
        let avg = Type1bAverager::new(&w, 1e-9, DEFAULT_MAX_CELLS).unwrap();
        let res = estimate_a2_cubes(&avg, Functional::Trace, &CubeSearchConfig::coarse()).unwrap();
        assert!((res.estimate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn radial_estimates_grow_with_exponent() {
        let cfg = CubeSearchConfig::anchored(vec![1.0], true, true);
        let mut last = 1.0;
        for g in [r(1, 2), r(1, 1), r(3, 2), r(19, 10)] {
            let avg = Type1bAverager::new(&scalar_1b(g, 2), 1e-8, DEFAULT_MAX_CELLS).unwrap();
            let v = estimate_a2_cubes(&avg, Functional::Trace, &cfg).unwrap().estimate;
            assert!(v > last, "{g}: {v} <= {last}");
            last = v;
        }
    }

    #[test]
    fn estimates_require_a2() {
        assert!(Type1bAverager::new(&scalar_1b(r(2, 1), 2), 1e-8, DEFAULT_MAX_CELLS).is_err());
        assert!(Type1aAverager::new(&scalar_1a(r(0, 1), r(1, 1))).is_err());
    }
}
