//! Structured verdicts shared by every decision procedure.

use std::fmt;

use crate::scalar::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    A2,
    NotA2,
    PositiveDefiniteAe,
    NotPositiveDefiniteAe,
    /// Locally integrable and positive definite a.e.
    LocallyIntegrable,
    NotLocallyIntegrable,
    /// Every necessary A₂ condition holds; membership is not decided.
    InconclusiveNecessaryPassed,
    /// Numerical tests near a degenerate coefficient matrix disagree.
    Marginal,
}

impl Verdict {
    /// Stable snake_case name used in machine-readable output.
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::A2 => "a2",
            Verdict::NotA2 => "not_a2",
            Verdict::PositiveDefiniteAe => "positive_definite_ae",
            Verdict::NotPositiveDefiniteAe => "not_positive_definite_ae",
            Verdict::LocallyIntegrable => "locally_integrable",
            Verdict::NotLocallyIntegrable => "not_locally_integrable",
            Verdict::InconclusiveNecessaryPassed => "inconclusive_necessary_passed",
            Verdict::Marginal => "marginal",
        }
    }

    /// Whether the verdict is a success for the check that produced it.
    pub fn is_positive(&self) -> bool {
        matches!(
            self,
            Verdict::A2
                | Verdict::PositiveDefiniteAe
                | Verdict::LocallyIntegrable
                | Verdict::InconclusiveNecessaryPassed
        )
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One machine-checkable reason behind a verdict. Indices are 0-based;
/// `coordinate` is set for multivariable weights.
#[derive(Clone, Debug, PartialEq)]
pub enum Finding {
    CoefficientNotSelfAdjoint {
        deviation: f64,
    },
    MidpointViolated {
        i: usize,
        j: usize,
        coordinate: Option<usize>,
        expected: Rational,
        actual: Rational,
    },
    /// Leading principal minor of order `order` (1-based) is not positive.
    LeadingMinorNotPositive {
        order: usize,
        value: f64,
    },
    MarginalDefiniteness {
        min_eigenvalue: f64,
    },
    DiagonalExponentOutOfRange {
        i: usize,
        coordinate: Option<usize>,
        exponent: Rational,
        lower: Rational,
        upper: Rational,
    },
    NonPositiveEigenvalueCoefficient {
        i: usize,
        alpha: f64,
    },
    /// `γ_i <= -1`: the weight (or its inverse) is not locally integrable.
    ExponentNotIntegrable {
        i: usize,
        exponent: Rational,
        inverse: bool,
    },
    UnequalRotationExponents {
        i: usize,
        j: usize,
        left: Rational,
        right: Rational,
    },
}

impl Finding {
    /// Stable snake_case identifier used in machine-readable output.
    pub fn code(&self) -> &'static str {
        match self {
            Finding::CoefficientNotSelfAdjoint { .. } => "coefficient_not_self_adjoint",
            Finding::MidpointViolated { .. } => "midpoint_violated",
            Finding::LeadingMinorNotPositive { .. } => "leading_minor_not_positive",
            Finding::MarginalDefiniteness { .. } => "marginal_definiteness",
            Finding::DiagonalExponentOutOfRange { .. } => "diagonal_exponent_out_of_range",
            Finding::NonPositiveEigenvalueCoefficient { .. } => "non_positive_eigenvalue_coefficient",
            Finding::ExponentNotIntegrable { .. } => "exponent_not_integrable",
            Finding::UnequalRotationExponents { .. } => "unequal_rotation_exponents",
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let coord = |c: &Option<usize>| match c {
            Some(c) => format!(" in coordinate {}", c + 1),
            None => String::new(),
        };
        match self {
            Finding::CoefficientNotSelfAdjoint { deviation } => write!(
                f,
                "coefficient matrix is not self-adjoint (relative deviation {deviation:e})"
            ),
            Finding::MidpointViolated {
                i,
                j,
                coordinate,
                expected,
                actual,
            } => write!(
                f,
                "exponent ({}, {}){} is {actual}, midpoint condition requires {expected}",
                i + 1,
                j + 1,
                coord(coordinate)
            ),
            Finding::LeadingMinorNotPositive { order, value } => {
                write!(f, "leading principal minor {order} is {value} (not positive)")
            }
            Finding::MarginalDefiniteness { min_eigenvalue } => write!(
                f,
                "coefficient matrix is numerically degenerate (smallest eigenvalue {min_eigenvalue:e})"
            ),
            Finding::DiagonalExponentOutOfRange {
                i,
                coordinate,
                exponent,
                lower,
                upper,
            } => write!(
                f,
                "diagonal exponent ({}, {}){} is {exponent}, outside ({lower}, {upper})",
                i + 1,
                i + 1,
                coord(coordinate)
            ),
            Finding::NonPositiveEigenvalueCoefficient { i, alpha } => {
                write!(f, "alpha_{} = {alpha} is not positive", i + 1)
            }
            Finding::ExponentNotIntegrable { i, exponent, inverse } => {
                if *inverse {
                    write!(
                        f,
                        "gamma_{} = {exponent} >= 1, so the inverse is not locally integrable",
                        i + 1
                    )
                } else {
                    write!(f, "gamma_{} = {exponent} <= -1, not locally integrable", i + 1)
                }
            }
            Finding::UnequalRotationExponents { i, j, left, right } => write!(
                f,
                "exponents unequal: gamma_{} = {left}, gamma_{} = {right}",
                i + 1,
                j + 1
            ),
        }
    }
}

/// Verdict plus the findings that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct A2Report<T> {
    pub verdict: Verdict,
    pub reasons: Vec<Finding>,
    /// A point where the weight has a negative eigenvalue, when one was found.
    pub witness: Option<T>,
    /// Free-form remarks about how the verdict was reached.
    pub notes: Vec<String>,
}

impl<T> A2Report<T> {
    pub fn new(verdict: Verdict) -> Self {
        Self {
            verdict,
            reasons: Vec::new(),
            witness: None,
            notes: Vec::new(),
        }
    }

    pub fn with_reasons(verdict: Verdict, reasons: Vec<Finding>) -> Self {
        Self {
            verdict,
            reasons,
            witness: None,
            notes: Vec::new(),
        }
    }
}
