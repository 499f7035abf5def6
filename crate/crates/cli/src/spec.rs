//! JSON weight specifications.

use std::fmt;

use a2w_core::linalg::DenseMatrix;
use a2w_core::{Rational, SymbolicPowerMatrix64, Type1aWeight64, Type1bWeight64, Type2Weight64, UnitaryFamily};
use num_complex::Complex64;
use serde::de::{self, Deserializer, Visitor};
use serde::Deserialize;

/// Exact rational exponent: a `"p/q"` string or a JSON integer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponent(pub Rational);

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct ExponentVisitor;

        impl Visitor<'_> for ExponentVisitor {
            type Value = Exponent;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an exact rational exponent: a string \"p/q\" or an integer")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Exponent, E> {
                Ok(Exponent(Rational::from_integer(v)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Exponent, E> {
                i64::try_from(v)
                    .map(|v| Exponent(Rational::from_integer(v)))
                    .map_err(|_| E::custom(format!("exponent {v} is out of range")))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Exponent, E> {
                Err(E::custom(format!(
                    "float exponent literal {v} is not allowed; write exponents as exact rationals such as \"3/2\""
                )))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Exponent, E> {
                parse_rational(v).map(Exponent).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(ExponentVisitor)
    }
}

pub fn parse_rational(s: &str) -> Result<Rational, String> {
    let t = s.trim();
    let bad = || format!("invalid rational {s:?}; expected \"p/q\" or an integer");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (t, "1"),
    };
    let num: i64 = num.parse().map_err(|_| bad())?;
    let den: i64 = den.parse().map_err(|_| bad())?;
    if den == 0 {
        return Err(format!("invalid rational {s:?}: zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// A real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl Coefficient {
    fn value(self) -> Complex64 {
        match self {
            Coefficient::Real(re) => Complex64::new(re, 0.0),
            Coefficient::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    Scalar {
        #[serde(default = "one")]
        coeff: f64,
        exponent: Exponent,
    },
    Type1 {
        n: Option<usize>,
        coeff: Vec<Vec<Coefficient>>,
        diag_exponents: Vec<Exponent>,
    },
    Type1Raw {
        n: Option<usize>,
        coeff: Vec<Vec<Coefficient>>,
        exponents: Vec<Vec<Exponent>>,
    },
    Type2 {
        n: Option<usize>,
        alphas: Vec<f64>,
        gammas: Vec<Exponent>,
        unitary: String,
    },
    Type1a {
        n: Option<usize>,
        coeff: Vec<Vec<Coefficient>>,
        /// One diagonal per coordinate.
        coordinate_diag_exponents: Vec<Vec<Exponent>>,
    },
    Type1b {
        n: Option<usize>,
        coeff: Vec<Vec<Coefficient>>,
        d: usize,
        diag_exponents: Option<Vec<Exponent>>,
        exponents: Option<Vec<Vec<Exponent>>>,
    },
}

/// A parsed, validated weight.
#[derive(Clone, Debug, PartialEq)]
pub enum Weight {
    Scalar(SymbolicPowerMatrix64),
    Type1(SymbolicPowerMatrix64),
    Type1Raw(SymbolicPowerMatrix64),
    Type2(Type2Weight64),
    Type1a(Type1aWeight64),
    Type1b(Type1bWeight64),
}

impl Weight {
    pub fn kind(&self) -> &'static str {
        match self {
            Weight::Scalar(_) => "scalar",
            Weight::Type1(_) => "type1",
            Weight::Type1Raw(_) => "type1_raw",
            Weight::Type2(_) => "type2",
            Weight::Type1a(_) => "type1a",
            Weight::Type1b(_) => "type1b",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Weight::Scalar(w) | Weight::Type1(w) | Weight::Type1Raw(w) => w.dim(),
            Weight::Type2(w) => w.dim(),
            Weight::Type1a(w) => w.dim(),
            Weight::Type1b(w) => w.dim(),
        }
    }
}

fn rationals(v: &[Exponent]) -> Vec<Rational> {
    v.iter().map(|e| e.0).collect()
}

fn coefficient_matrix(rows: &[Vec<Coefficient>], n: Option<usize>) -> Result<DenseMatrix<f64>, String> {
    let size = rows.len();
    if let Some(n) = n {
        if n != size {
            return Err(format!("n = {n} but coeff has {size} rows"));
        }
    }
    let rows: Vec<Vec<Complex64>> = rows.iter().map(|r| r.iter().map(|c| c.value()).collect()).collect();
    DenseMatrix::from_rows(&rows).map_err(|e| format!("coeff: {e}"))
}

impl WeightSpec {
    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("invalid weight spec: {e}"))
    }

    pub fn build(&self) -> Result<Weight, String> {
        let core = |e: a2w_core::Error| e.to_string();
        Ok(match self {
            WeightSpec::Scalar { coeff, exponent } => {
                if !coeff.is_finite() {
                    return Err("coeff must be finite".into());
                }
                Weight::Scalar(SymbolicPowerMatrix64::scalar(*coeff, exponent.0))
            }
            WeightSpec::Type1 {
                n,
                coeff,
                diag_exponents,
            } => Weight::Type1(
                SymbolicPowerMatrix64::build_type1(coefficient_matrix(coeff, *n)?, &rationals(diag_exponents))
                    .map_err(core)?,
            ),
            WeightSpec::Type1Raw { n, coeff, exponents } => {
                let rows: Vec<Vec<Rational>> = exponents.iter().map(|r| rationals(r)).collect();
                Weight::Type1Raw(
                    SymbolicPowerMatrix64::build_type1_raw(coefficient_matrix(coeff, *n)?, &rows).map_err(core)?,
                )
            }
            WeightSpec::Type2 {
                n,
                alphas,
                gammas,
                unitary,
            } => {
                if let Some(n) = n {
                    if *n != alphas.len() {
                        return Err(format!("n = {n} but {} alphas given", alphas.len()));
                    }
                }
                let family = UnitaryFamily::parse(unitary).ok_or_else(|| {
                    format!("unknown unitary {unitary:?}; expected identity, rotation2d or rotation3d_euler")
                })?;
                Weight::Type2(Type2Weight64::new(alphas.clone(), rationals(gammas), family).map_err(core)?)
            }
            WeightSpec::Type1a {
                n,
                coeff,
                coordinate_diag_exponents,
            } => {
                let diags: Vec<Vec<Rational>> = coordinate_diag_exponents.iter().map(|d| rationals(d)).collect();
                Weight::Type1a(Type1aWeight64::from_diagonals(coefficient_matrix(coeff, *n)?, &diags).map_err(core)?)
            }
            WeightSpec::Type1b {
                n,
                coeff,
                d,
                diag_exponents,
                exponents,
            } => {
                let coeff = coefficient_matrix(coeff, *n)?;
                let w = match (diag_exponents, exponents) {
                    (Some(diag), None) => Type1bWeight64::from_diagonal(coeff, &rationals(diag), *d),
                    (None, Some(full)) => {
                        let rows: Vec<Vec<Rational>> = full.iter().map(|r| rationals(r)).collect();
                        Type1bWeight64::new(coeff, &rows, *d)
                    }
                    _ => return Err("type1b needs exactly one of diag_exponents or exponents".into()),
                };
                Weight::Type1b(w.map_err(core)?)
            }
        })
    }
}

/// Reads, parses and validates a weight spec file.
pub fn load(path: &std::path::Path) -> Result<(serde_json::Value, Weight), String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let spec = WeightSpec::from_json(&text)?;
    let weight = spec.build()?;
    let echo = serde_json::from_str(&text).map_err(|e| format!("invalid JSON: {e}"))?;
    Ok((echo, weight))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_parse_exactly() {
        assert_eq!(parse_rational("-2/3").unwrap(), Rational::new(-2, 3));
        assert_eq!(parse_rational(" 4 ").unwrap(), Rational::from_integer(4));
        assert_eq!(parse_rational("6/8").unwrap(), Rational::new(3, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("0.5").is_err());
    }

    #[test]
    fn type1_spec() {
        let s =
            WeightSpec::from_json(r#"{"kind":"type1","n":2,"coeff":[[5,3],[3,2]],"diag_exponents":["1/2","-2/3"]}"#)
                .unwrap();
        let Weight::Type1(w) = s.build().unwrap() else { panic!() };
        assert_eq!(w.exponent(0, 1), Rational::new(-1, 12));
    }

    #[test]
    fn float_exponents_rejected() {
        let err = WeightSpec::from_json(r#"{"kind":"scalar","exponent":1.5}"#).unwrap_err();
        assert!(err.contains("float exponent literal"), "{err}");
        let err = WeightSpec::from_json(r#"{"kind":"scalar","exponent":2.0}"#).unwrap_err();
        assert!(err.contains("float exponent literal"), "{err}");
    }

    #[test]
    fn complex_coefficients_and_kinds() {
        let s =
            WeightSpec::from_json(r#"{"kind":"type1_raw","coeff":[[2,[0,1]],[[0,-1],2]],"exponents":[[0,0],[0,0]]}"#)
                .unwrap();
        let Weight::Type1Raw(w) = s.build().unwrap() else {
            panic!()
        };
        assert_eq!(w.coeff().get(0, 1), Complex64::new(0.0, 1.0));
        let s = WeightSpec::from_json(r#"{"kind":"type2","alphas":[1,1],"gammas":[0,"1/2"],"unitary":"rotation2d"}"#)
            .unwrap();
        assert_eq!(s.build().unwrap().kind(), "type2");
        let s =
            WeightSpec::from_json(r#"{"kind":"type1a","coeff":[[1]],"coordinate_diag_exponents":[["1/2"],["1/2"]]}"#)
                .unwrap();
        assert_eq!(s.build().unwrap().kind(), "type1a");
        let s = WeightSpec::from_json(r#"{"kind":"type1b","coeff":[[1]],"d":2,"diag_exponents":["3/2"]}"#).unwrap();
        assert_eq!(s.build().unwrap().kind(), "type1b");
    }

    #[test]
    fn schema_errors() {
        assert!(WeightSpec::from_json(r#"{"kind":"type9"}"#).is_err());
        assert!(WeightSpec::from_json(r#"{"kind":"scalar","exponent":"1/2","extra":1}"#).is_err());
        let s = WeightSpec::from_json(r#"{"kind":"type1","n":3,"coeff":[[1]],"diag_exponents":[0]}"#).unwrap();
        assert!(s.build().is_err());
        let s = WeightSpec::from_json(r#"{"kind":"type2","alphas":[1],"gammas":[0],"unitary":"spin"}"#).unwrap();
        assert!(s.build().is_err());
    }
}
