//! Matrix power weights on the real line and in a few dimensions: exact
//! A₂ decisions from the structure of the exponents and coefficients, and
//! numeric lower bounds for A₂ characteristics.
//!
//! All numeric code is generic over [`Real`] (`f32` or `f64`); exponents are
//! exact [`Rational`]s. The `*64` aliases below fix the scalar to `f64`.

// `!(x > 0)` style checks are deliberate: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimator;
pub mod linalg;
pub mod multivar;
pub mod quadrature;
pub mod report;
pub mod scalar;
pub mod scalar_power;
pub mod type1;
pub mod type2;

pub use error::{Error, Result};
pub use estimator::{Functional, SupSearchConfig, SupSearchResult};
pub use linalg::{DenseMatrix, SelfAdjointMatrix};
pub use multivar::{Cube, Type1aWeight, Type1bWeight};
pub use report::{A2Report, Finding, Verdict};
pub use scalar::{Rational, Real};
pub use scalar_power::{Interval, ScalarPowerWeight};
pub use type1::SymbolicPowerMatrix;
pub use type2::{DivergenceRow, Type2Weight, UnitaryFamily};

pub type DenseMatrix64 = DenseMatrix<f64>;
pub type SelfAdjointMatrix64 = SelfAdjointMatrix<f64>;
pub type Interval64 = Interval<f64>;
pub type Cube64 = Cube<f64>;
pub type ScalarPowerWeight64 = ScalarPowerWeight<f64>;
pub type SymbolicPowerMatrix64 = SymbolicPowerMatrix<f64>;
pub type Type2Weight64 = Type2Weight<f64>;
pub type Type1aWeight64 = Type1aWeight<f64>;
pub type Type1bWeight64 = Type1bWeight<f64>;
pub type A2Report64 = A2Report<f64>;
pub type SupSearchConfig64 = SupSearchConfig<f64>;
pub type SupSearchResult64 = SupSearchResult<f64>;
pub type DivergenceRow64 = DivergenceRow<f64>;

pub type DenseMatrix32 = DenseMatrix<f32>;
pub type SelfAdjointMatrix32 = SelfAdjointMatrix<f32>;
pub type SymbolicPowerMatrix32 = SymbolicPowerMatrix<f32>;
