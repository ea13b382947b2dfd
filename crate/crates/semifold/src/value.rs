//! Scalar values shared by every semiring carrier.
//!
//! A [`Value`] is one of: an exact rational, a finite float64, a boolean, or a
//! symbolic infinity. Infinities are dedicated variants rather than float
//! payloads, so `Value::Float` always holds a finite, non-NaN number and
//! `-0.0` is canonicalized to `0.0` at construction. Rationals are kept in
//! lowest terms with a positive denominator (enforced by `BigRational`).
//!
//! Mixed rational/float arithmetic promotes to float; comparisons are exact
//! (the float side is expanded to a rational, never the other way around).
//! Indeterminate forms (`0 × ∞`, `∞ − ∞`) are errors, not conventions.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ValueError {
    #[error("cannot combine {left} with {right}: carriers differ")]
    TypeMismatch {
        left: &'static str,
        right: &'static str,
    },
    #[error("indeterminate form: {0}")]
    UndefinedForm(&'static str),
    #[error("`{0}` is not a value (expected decimal, rational, `inf`, `-inf`, `true`, `false`)")]
    Parse(String),
    #[error("NaN is not a value")]
    NotANumber,
    #[error("rational with zero denominator")]
    ZeroDenominator,
}

/// One element of a semiring carrier.
#[derive(Debug, Clone)]
pub enum Value {
    Rational(BigRational),
    Float(f64),
    Bool(bool),
    PosInf,
    NegInf,
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Rational(BigRational::from_integer(BigInt::from(n)))
    }

    /// Exact rational `n/d`. Panics on `d = 0`; use [`Value::parse`] for
    /// untrusted input.
    pub fn ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Value::Rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// Canonicalizing float constructor: rejects NaN, maps `±∞` to the
    /// symbolic variants and `-0.0` to `0.0`.
    pub fn from_f64(f: f64) -> Result<Self, ValueError> {
        if f.is_nan() {
            return Err(ValueError::NotANumber);
        }
        if f == f64::INFINITY {
            return Ok(Value::PosInf);
        }
        if f == f64::NEG_INFINITY {
            return Ok(Value::NegInf);
        }
        Ok(Value::Float(if f == 0.0 { 0.0 } else { f }))
    }

    pub fn carrier(&self) -> &'static str {
        match self {
            Value::Rational(_) => "rational",
            Value::Float(_) => "float64",
            Value::Bool(_) => "boolean",
            Value::PosInf => "+inf",
            Value::NegInf => "-inf",
        }
    }

    pub fn is_boolean(&self) -> bool {
        matches!(self, Value::Bool(_))
    }

    pub fn is_numeric(&self) -> bool {
        !self.is_boolean()
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, Value::Rational(_) | Value::Float(_))
    }

    /// Lossy view as f64 (`None` for booleans).
    pub fn to_f64(&self) -> Option<f64> {
        match self {
            Value::Rational(r) => Some(r.to_f64().unwrap_or_else(|| {
                // Magnitudes beyond f64 range keep their sign.
                if r.is_negative() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            })),
            Value::Float(f) => Some(*f),
            Value::PosInf => Some(f64::INFINITY),
            Value::NegInf => Some(f64::NEG_INFINITY),
            Value::Bool(_) => None,
        }
    }

    /// Exact rational view; floats expand via their binary representation.
    /// `None` for booleans and infinities.
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            Value::Rational(r) => Some(r.clone()),
            Value::Float(f) => BigRational::from_float(*f),
            _ => None,
        }
    }

    /// Convert to the float backend (infinities and booleans pass through).
    pub fn to_float_backend(&self) -> Self {
        match self {
            Value::Rational(r) => {
                // Out-of-range magnitudes saturate to the symbolic infinities.
                Value::from_f64(r.to_f64().unwrap_or(if r.is_negative() {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }))
                .expect("rational is never NaN")
            }
            other => other.clone(),
        }
    }

    /// Convert to the exact backend (float64 expands exactly).
    pub fn to_rational_backend(&self) -> Self {
        match self {
            Value::Float(f) => Value::Rational(
                BigRational::from_float(*f).expect("stored floats are finite"),
            ),
            other => other.clone(),
        }
    }

    /// Numeric (or boolean) equality across carriers: `Rational(1/2)` equals
    /// `Float(0.5)`. Booleans never equal numerics.
    pub fn numeric_eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Bool(a), Value::Bool(b)) => a == b,
            (Value::Bool(_), _) | (_, Value::Bool(_)) => false,
            _ => numeric_cmp(self, other) == Some(Ordering::Equal),
        }
    }

    pub(crate) fn as_bool(&self) -> Result<bool, ValueError> {
        match self {
            Value::Bool(b) => Ok(*b),
            other => Err(ValueError::TypeMismatch {
                left: "boolean",
                right: other.carrier(),
            }),
        }
    }

    /// `self + other` (numeric); `∞ + (−∞)` is an indeterminate form.
    pub fn add(&self, other: &Value) -> Result<Value, ValueError> {
        use Value::*;
        match (self, other) {
            (Bool(_), _) | (_, Bool(_)) => Err(mismatch(self, other)),
            (PosInf, NegInf) | (NegInf, PosInf) => {
                Err(ValueError::UndefinedForm("(+inf) + (-inf)"))
            }
            (PosInf, _) | (_, PosInf) => Ok(PosInf),
            (NegInf, _) | (_, NegInf) => Ok(NegInf),
            (Rational(a), Rational(b)) => Ok(Rational(a + b)),
            (a, b) => Value::from_f64(f64_of(a) + f64_of(b)),
        }
    }

    /// `self − other` (numeric); `∞ − ∞` of equal sign is indeterminate.
    pub fn sub(&self, other: &Value) -> Result<Value, ValueError> {
        use Value::*;
        match (self, other) {
            (Bool(_), _) | (_, Bool(_)) => Err(mismatch(self, other)),
            (PosInf, PosInf) | (NegInf, NegInf) => {
                Err(ValueError::UndefinedForm("inf - inf"))
            }
            (PosInf, _) | (_, NegInf) => Ok(PosInf),
            (NegInf, _) | (_, PosInf) => Ok(NegInf),
            (Rational(a), Rational(b)) => Ok(Rational(a - b)),
            (a, b) => Value::from_f64(f64_of(a) - f64_of(b)),
        }
    }

    /// `self × other` (numeric); `0 × ∞` is an indeterminate form.
    pub fn mul(&self, other: &Value) -> Result<Value, ValueError> {
        use Value::*;
        match (self, other) {
            (Bool(_), _) | (_, Bool(_)) => Err(mismatch(self, other)),
            (Rational(a), Rational(b)) => Ok(Rational(a * b)),
            (Float(_), Float(_)) | (Rational(_), Float(_)) | (Float(_), Rational(_)) => {
                Value::from_f64(f64_of(self) * f64_of(other))
            }
            // At least one infinity from here on.
            _ => {
                let (sa, sb) = (sign_of(self), sign_of(other));
                if sa == 0 || sb == 0 {
                    Err(ValueError::UndefinedForm("0 × inf"))
                } else if sa * sb > 0 {
                    Ok(PosInf)
                } else {
                    Ok(NegInf)
                }
            }
        }
    }

    /// Choice minimum: returns (a clone of) one of the operands.
    pub fn min_choice(&self, other: &Value) -> Result<Value, ValueError> {
        match numeric_cmp(self, other) {
            Some(Ordering::Greater) => Ok(other.clone()),
            Some(_) => Ok(self.clone()),
            None => Err(mismatch(self, other)),
        }
    }

    /// Choice maximum: returns (a clone of) one of the operands.
    pub fn max_choice(&self, other: &Value) -> Result<Value, ValueError> {
        match numeric_cmp(self, other) {
            Some(Ordering::Less) => Ok(other.clone()),
            Some(_) => Ok(self.clone()),
            None => Err(mismatch(self, other)),
        }
    }

    /// `self × n` for a cardinality factor (used by counting closed forms).
    /// `n` must be non-negative.
    pub fn scale_by_count(&self, n: &BigInt) -> Result<Value, ValueError> {
        use Value::*;
        match self {
            Bool(_) => Err(ValueError::TypeMismatch {
                left: "boolean",
                right: "count",
            }),
            Rational(r) => Ok(Rational(r * BigRational::from_integer(n.clone()))),
            Float(f) => {
                if *f == 0.0 {
                    return Ok(Float(0.0));
                }
                // Counts beyond f64 range overflow to the right infinity.
                let nf = n.to_f64().unwrap_or(f64::INFINITY);
                Value::from_f64(f * nf)
            }
            PosInf | NegInf => {
                if n.is_zero() {
                    Err(ValueError::UndefinedForm("0 × inf"))
                } else {
                    Ok(self.clone())
                }
            }
        }
    }

    /// Total order used for canonical sorting (grids, tie-breaks).
    /// Booleans sort below all numerics; numeric comparison is exact, with
    /// equal-valued rational/float pairs ordered rational-first so the order
    /// stays consistent with the carrier-strict `Eq`.
    pub fn cmp_total(&self, other: &Value) -> Ordering {
        use Value::*;
        fn rank(v: &Value) -> u8 {
            match v {
                Bool(_) => 0,
                _ => 1,
            }
        }
        match rank(self).cmp(&rank(other)) {
            Ordering::Equal => {}
            o => return o,
        }
        match (self, other) {
            (Bool(a), Bool(b)) => a.cmp(b),
            _ => match numeric_cmp(self, other).expect("both numeric") {
                Ordering::Equal => carrier_rank(self).cmp(&carrier_rank(other)),
                o => o,
            },
        }
    }

    /// Parse the text syntax: `3.5`, `7/2`, `-4`, `inf`, `-inf`, `true`, `false`.
    pub fn parse(text: &str) -> Result<Value, ValueError> {
        let t = text.trim();
        match t {
            "true" => return Ok(Value::Bool(true)),
            "false" => return Ok(Value::Bool(false)),
            "inf" | "+inf" => return Ok(Value::PosInf),
            "-inf" => return Ok(Value::NegInf),
            _ => {}
        }
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.parse().map_err(|_| ValueError::Parse(t.to_string()))?;
            let d: BigInt = d.parse().map_err(|_| ValueError::Parse(t.to_string()))?;
            if d.is_zero() {
                return Err(ValueError::ZeroDenominator);
            }
            return Ok(Value::Rational(BigRational::new(n, d)));
        }
        if t.contains(['.', 'e', 'E']) {
            let f: f64 = t.parse().map_err(|_| ValueError::Parse(t.to_string()))?;
            return Value::from_f64(f);
        }
        let n: BigInt = t.parse().map_err(|_| ValueError::Parse(t.to_string()))?;
        Ok(Value::Rational(BigRational::from_integer(n)))
    }
}

fn mismatch(a: &Value, b: &Value) -> ValueError {
    ValueError::TypeMismatch {
        left: a.carrier(),
        right: b.carrier(),
    }
}

fn f64_of(v: &Value) -> f64 {
    v.to_f64().expect("numeric value")
}

/// Sign of a numeric value: -1, 0, or +1.
fn sign_of(v: &Value) -> i8 {
    match v {
        Value::Rational(r) => {
            if r.is_zero() {
                0
            } else if r.is_negative() {
                -1
            } else {
                1
            }
        }
        Value::Float(f) => {
            if *f == 0.0 {
                0
            } else if *f < 0.0 {
                -1
            } else {
                1
            }
        }
        Value::PosInf => 1,
        Value::NegInf => -1,
        Value::Bool(_) => 0,
    }
}

fn carrier_rank(v: &Value) -> u8 {
    match v {
        Value::Bool(_) => 0,
        Value::NegInf => 1,
        Value::Rational(_) => 2,
        Value::Float(_) => 3,
        Value::PosInf => 4,
    }
}

/// Exact numeric comparison across rational/float/∞; `None` if either side
/// is boolean.
pub fn numeric_cmp(a: &Value, b: &Value) -> Option<Ordering> {
    use Value::*;
    match (a, b) {
        (Bool(_), _) | (_, Bool(_)) => None,
        (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
        (NegInf, _) => Some(Ordering::Less),
        (_, NegInf) => Some(Ordering::Greater),
        (PosInf, _) => Some(Ordering::Greater),
        (_, PosInf) => Some(Ordering::Less),
        (Rational(x), Rational(y)) => Some(x.cmp(y)),
        (Float(x), Float(y)) => x.partial_cmp(y),
        (Rational(x), Float(y)) => {
            let y = BigRational::from_float(*y).expect("stored floats are finite");
            Some(x.cmp(&y))
        }
        (Float(x), Rational(y)) => {
            let x = BigRational::from_float(*x).expect("stored floats are finite");
            Some(x.cmp(y))
        }
    }
}

/// Carrier-strict equality (`Rational(1/2) != Float(0.5)`); use
/// [`Value::numeric_eq`] for cross-carrier identity checks.
impl PartialEq for Value {
    fn eq(&self, other: &Self) -> bool {
        use Value::*;
        match (self, other) {
            (Rational(a), Rational(b)) => a == b,
            (Float(a), Float(b)) => a == b,
            (Bool(a), Bool(b)) => a == b,
            (PosInf, PosInf) | (NegInf, NegInf) => true,
            _ => false,
        }
    }
}

impl Eq for Value {}

impl Hash for Value {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match self {
            Value::Rational(r) => {
                0u8.hash(state);
                r.numer().hash(state);
                r.denom().hash(state);
            }
            Value::Float(f) => {
                1u8.hash(state);
                // -0.0 never survives construction, but normalize defensively
                // so Hash stays consistent with `==`.
                let f = if *f == 0.0 { 0.0 } else { *f };
                f.to_bits().hash(state);
            }
            Value::Bool(b) => {
                2u8.hash(state);
                b.hash(state);
            }
            Value::PosInf => 3u8.hash(state),
            Value::NegInf => 4u8.hash(state),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Rational(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            // Integral floats keep a decimal point so the text round-trips
            // back to the float carrier.
            Value::Float(x) => {
                if x.fract() == 0.0 {
                    write!(f, "{x:.1}")
                } else {
                    write!(f, "{x}")
                }
            }
            Value::Bool(b) => write!(f, "{b}"),
            Value::PosInf => write!(f, "inf"),
            Value::NegInf => write!(f, "-inf"),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Bool(b)
    }
}

impl FromPrimitive for Value {
    fn from_i64(n: i64) -> Option<Self> {
        Some(Value::int(n))
    }
    fn from_u64(n: u64) -> Option<Self> {
        Some(Value::Rational(BigRational::from_integer(BigInt::from(n))))
    }
    fn from_f64(n: f64) -> Option<Self> {
        Value::from_f64(n).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_reduce_to_lowest_terms() {
        let v = Value::ratio(6, 4);
        assert_eq!(v.to_string(), "3/2");
        let neg = Value::ratio(1, -2);
        assert_eq!(neg.to_string(), "-1/2");
    }

    #[test]
    fn float_construction_canonicalizes() {
        assert_eq!(Value::from_f64(f64::INFINITY).unwrap(), Value::PosInf);
        assert_eq!(Value::from_f64(f64::NEG_INFINITY).unwrap(), Value::NegInf);
        assert_eq!(Value::from_f64(-0.0).unwrap(), Value::Float(0.0));
        assert!(matches!(
            Value::from_f64(f64::NAN),
            Err(ValueError::NotANumber)
        ));
    }

    #[test]
    fn addition_handles_infinities() {
        assert_eq!(Value::int(3).add(&Value::PosInf).unwrap(), Value::PosInf);
        assert!(matches!(
            Value::PosInf.add(&Value::NegInf),
            Err(ValueError::UndefinedForm(_))
        ));
    }

    #[test]
    fn subtraction_mirrors_addition() {
        assert_eq!(
            Value::ratio(1, 2).sub(&Value::ratio(1, 3)).unwrap(),
            Value::ratio(1, 6)
        );
        assert_eq!(Value::int(3).sub(&Value::PosInf).unwrap(), Value::NegInf);
        assert_eq!(
            Value::Float(0.75).sub(&Value::ratio(1, 4)).unwrap(),
            Value::Float(0.5)
        );
        assert!(matches!(
            Value::PosInf.sub(&Value::PosInf),
            Err(ValueError::UndefinedForm(_))
        ));
    }

    #[test]
    fn zero_times_infinity_is_rejected() {
        assert!(matches!(
            Value::int(0).mul(&Value::PosInf),
            Err(ValueError::UndefinedForm(_))
        ));
        assert_eq!(Value::int(-2).mul(&Value::PosInf).unwrap(), Value::NegInf);
    }

    #[test]
    fn mixed_arithmetic_promotes_to_float() {
        let got = Value::ratio(1, 2).add(&Value::Float(0.25)).unwrap();
        assert_eq!(got, Value::Float(0.75));
    }

    #[test]
    fn comparison_is_exact_across_carriers() {
        assert!(Value::ratio(1, 2).numeric_eq(&Value::Float(0.5)));
        // 1/3 is not representable as f64; closest float differs.
        assert!(!Value::ratio(1, 3).numeric_eq(&Value::Float(1.0 / 3.0)));
        assert_eq!(
            Value::ratio(1, 3)
                .min_choice(&Value::Float(0.25))
                .unwrap(),
            Value::Float(0.25)
        );
    }

    #[test]
    fn booleans_do_not_mix_with_numerics() {
        assert!(matches!(
            Value::Bool(true).add(&Value::int(1)),
            Err(ValueError::TypeMismatch { .. })
        ));
        assert!(Value::Bool(true)
            .min_choice(&Value::int(1))
            .is_err());
    }

    #[test]
    fn parse_round_trips_canonical_text() {
        for text in ["3", "-4", "7/2", "-1/3", "3.5", "0.1", "inf", "-inf", "true", "false"] {
            let v = Value::parse(text).unwrap();
            assert_eq!(v.to_string(), text, "round-trip of {text}");
        }
        // Non-canonical inputs normalize but stay in their carrier.
        assert_eq!(Value::parse("6/4").unwrap().to_string(), "3/2");
        assert_eq!(Value::parse("2.0").unwrap(), Value::Float(2.0));
        assert_eq!(Value::parse("2.0").unwrap().to_string(), "2.0");
    }

    #[test]
    fn parse_rejects_garbage() {
        for text in ["", "x", "1/0", "nan", "--3", "1.2.3"] {
            assert!(Value::parse(text).is_err(), "{text} should not parse");
        }
    }

    #[test]
    fn total_order_is_deterministic() {
        let mut vs = vec![
            Value::PosInf,
            Value::int(2),
            Value::Bool(true),
            Value::NegInf,
            Value::Float(0.5),
            Value::Bool(false),
            Value::ratio(1, 2),
        ];
        vs.sort_by(|a, b| a.cmp_total(b));
        let shown: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
        assert_eq!(shown, ["false", "true", "-inf", "1/2", "0.5", "2", "inf"]);
    }
}
