//! Commutative semigroup operations and the bundled semirings.
//!
//! A semiring here is a pair of commutative semigroup operations on one
//! carrier: marginalization `⊕` and expansion `⊗`, with `⊗` distributing
//! over `⊕`, an expansion identity `1⊗`, and a marginalization identity
//! `1⊕` that annihilates under `⊗`. Six are bundled:
//!
//! | name          | ⊕   | ⊗    | 1⊕    | 1⊗    | ⊗ invertible |
//! |---------------|-----|------|-------|-------|--------------|
//! | `sum-product` | sum | prod | 0     | 1     | yes          |
//! | `max-product` | max | prod | 0     | 1     | yes          |
//! | `min-sum`     | min | sum  | +inf  | 0     | yes          |
//! | `min-max`     | min | max  | +inf  | -inf  | no           |
//! | `or-and`      | or  | and  | false | true  | no           |
//! | `xor-and`     | xor | and  | false | true  | no           |
//!
//! Numeric carriers mix exact rationals and float64 freely (arithmetic
//! promotes to float, comparison stays exact); the boolean semirings reject
//! numerics with `TypeMismatch`.

use crate::value::{Value, ValueError};
use num_traits::Signed;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error(transparent)]
    Value(#[from] ValueError),
    #[error("unknown semiring `{0}`")]
    UnknownSemiring(String),
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error("expansion of `{semiring}` is not invertible")]
    NotInvertible { semiring: &'static str },
    #[error("cannot invert the annihilator {value} of `{semiring}`")]
    DivisionByAnnihilator {
        semiring: &'static str,
        value: String,
    },
    #[error("value {value} has no inverse under {op}")]
    NoInverse { op: OpTag, value: String },
}

/// The seven operation symbols usable in queries and semirings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpTag {
    Sum,
    Prod,
    Min,
    Max,
    Or,
    And,
    Xor,
}

impl OpTag {
    pub const ALL: [OpTag; 7] = [
        OpTag::Sum,
        OpTag::Prod,
        OpTag::Min,
        OpTag::Max,
        OpTag::Or,
        OpTag::And,
        OpTag::Xor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpTag::Sum => "sum",
            OpTag::Prod => "prod",
            OpTag::Min => "min",
            OpTag::Max => "max",
            OpTag::Or => "or",
            OpTag::And => "and",
            OpTag::Xor => "xor",
        }
    }

    pub fn parse(s: &str) -> Result<OpTag, AlgebraError> {
        OpTag::ALL
            .into_iter()
            .find(|op| op.name() == s)
            .ok_or_else(|| AlgebraError::UnknownOp(s.to_string()))
    }

    /// Identity element on the op's natural carrier.
    pub fn identity(self) -> Value {
        match self {
            OpTag::Sum => Value::int(0),
            OpTag::Prod => Value::int(1),
            OpTag::Min => Value::PosInf,
            OpTag::Max => Value::NegInf,
            OpTag::Or => Value::Bool(false),
            OpTag::And => Value::Bool(true),
            OpTag::Xor => Value::Bool(false),
        }
    }

    /// Choice ops return one of their operands.
    pub fn is_choice(self) -> bool {
        matches!(self, OpTag::Min | OpTag::Max | OpTag::Or | OpTag::And)
    }

    pub fn is_idempotent(self) -> bool {
        self.is_choice()
    }

    pub fn apply(self, a: &Value, b: &Value) -> Result<Value, AlgebraError> {
        let r = match self {
            OpTag::Sum => a.add(b)?,
            OpTag::Prod => a.mul(b)?,
            OpTag::Min => a.min_choice(b)?,
            OpTag::Max => a.max_choice(b)?,
            OpTag::Or => Value::Bool(a.as_bool()? | b.as_bool()?),
            OpTag::And => Value::Bool(a.as_bool()? & b.as_bool()?),
            OpTag::Xor => Value::Bool(a.as_bool()? ^ b.as_bool()?),
        };
        Ok(r)
    }

    /// Fold an iterator starting from the op's identity.
    pub fn fold<'a, I>(self, values: I) -> Result<Value, AlgebraError>
    where
        I: IntoIterator<Item = &'a Value>,
    {
        let mut acc = self.identity();
        for v in values {
            acc = self.apply(&acc, v)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for OpTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Apply one commutative semigroup operation.
pub fn combine(op: OpTag, a: &Value, b: &Value) -> Result<Value, AlgebraError> {
    op.apply(a, b)
}

/// A marginalization/expansion pair with its identities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemiringSpec {
    pub name: &'static str,
    pub marg: OpTag,
    pub expand: OpTag,
    pub one_plus: Value,
    pub one_times: Value,
    /// Whether `⊗` has inverses away from the annihilator.
    pub invertible: bool,
}

impl SemiringSpec {
    pub fn sum_product() -> Self {
        SemiringSpec {
            name: "sum-product",
            marg: OpTag::Sum,
            expand: OpTag::Prod,
            one_plus: Value::int(0),
            one_times: Value::int(1),
            invertible: true,
        }
    }

    pub fn max_product() -> Self {
        SemiringSpec {
            name: "max-product",
            marg: OpTag::Max,
            expand: OpTag::Prod,
            // Carrier is the non-negative numerics, where 0 is both the max
            // identity and the annihilator of prod.
            one_plus: Value::int(0),
            one_times: Value::int(1),
            invertible: true,
        }
    }

    pub fn min_sum() -> Self {
        SemiringSpec {
            name: "min-sum",
            marg: OpTag::Min,
            expand: OpTag::Sum,
            one_plus: Value::PosInf,
            one_times: Value::int(0),
            invertible: true,
        }
    }

    pub fn min_max() -> Self {
        SemiringSpec {
            name: "min-max",
            marg: OpTag::Min,
            expand: OpTag::Max,
            one_plus: Value::PosInf,
            one_times: Value::NegInf,
            invertible: false,
        }
    }

    pub fn or_and() -> Self {
        SemiringSpec {
            name: "or-and",
            marg: OpTag::Or,
            expand: OpTag::And,
            one_plus: Value::Bool(false),
            one_times: Value::Bool(true),
            invertible: false,
        }
    }

    pub fn xor_and() -> Self {
        SemiringSpec {
            name: "xor-and",
            marg: OpTag::Xor,
            expand: OpTag::And,
            one_plus: Value::Bool(false),
            one_times: Value::Bool(true),
            invertible: false,
        }
    }

    pub fn all() -> Vec<SemiringSpec> {
        vec![
            Self::sum_product(),
            Self::max_product(),
            Self::min_sum(),
            Self::min_max(),
            Self::or_and(),
            Self::xor_and(),
        ]
    }

    pub fn plus(&self, a: &Value, b: &Value) -> Result<Value, AlgebraError> {
        self.marg.apply(a, b)
    }

    pub fn times(&self, a: &Value, b: &Value) -> Result<Value, AlgebraError> {
        self.expand.apply(a, b)
    }

    /// `⊕`-fold starting from `1⊕`.
    pub fn plus_fold<'a, I>(&self, values: I) -> Result<Value, AlgebraError>
    where
        I: IntoIterator<Item = &'a Value>,
    {
        let mut acc = self.one_plus.clone();
        for v in values {
            acc = self.plus(&acc, v)?;
        }
        Ok(acc)
    }

    /// `⊗`-fold starting from `1⊗`.
    pub fn times_fold<'a, I>(&self, values: I) -> Result<Value, AlgebraError>
    where
        I: IntoIterator<Item = &'a Value>,
    {
        let mut acc = self.one_times.clone();
        for v in values {
            acc = self.times(&acc, v)?;
        }
        Ok(acc)
    }

    pub fn is_one_plus(&self, v: &Value) -> bool {
        v.numeric_eq(&self.one_plus)
    }

    pub fn is_one_times(&self, v: &Value) -> bool {
        v.numeric_eq(&self.one_times)
    }
}

/// Look up a bundled semiring by its hyphenated name.
pub fn registry_lookup(name: &str) -> Result<SemiringSpec, AlgebraError> {
    SemiringSpec::all()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| AlgebraError::UnknownSemiring(name.to_string()))
}

/// The pair `(1⊗, 1⊕)`: the images of a true and a false condition when a
/// constraint is written as a factor over this semiring.
pub fn annihilator_identity(s: &SemiringSpec) -> (Value, Value) {
    (s.one_times.clone(), s.one_plus.clone())
}

/// Inverse of `a` under `⊗`. Errors: the semiring's expansion has no
/// inverses, or `a` is the annihilator, or `a` has no inverse on the carrier
/// (infinite values under an additive expansion).
pub fn invert(s: &SemiringSpec, a: &Value) -> Result<Value, AlgebraError> {
    if !s.invertible {
        return Err(AlgebraError::NotInvertible { semiring: s.name });
    }
    if s.is_one_plus(a) {
        return Err(AlgebraError::DivisionByAnnihilator {
            semiring: s.name,
            value: a.to_string(),
        });
    }
    let no_inverse = || AlgebraError::NoInverse {
        op: s.expand,
        value: a.to_string(),
    };
    match s.expand {
        OpTag::Prod => match a {
            Value::Rational(r) => Ok(Value::Rational(r.recip())),
            Value::Float(f) => Ok(Value::from_f64(1.0 / *f)?),
            _ => Err(no_inverse()),
        },
        OpTag::Sum => match a {
            Value::Rational(r) => Ok(Value::Rational(-r)),
            Value::Float(f) => Ok(Value::from_f64(-*f)?),
            _ => Err(no_inverse()),
        },
        _ => Err(AlgebraError::NotInvertible { semiring: s.name }),
    }
}

/// Result of [`normalize`]: the (possibly rescaled) vector plus whether
/// rescaling was actually applied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Normalized {
    pub values: Vec<Value>,
    pub applied: bool,
}

/// Rescale `v` so its `⊕`-reduction becomes `1⊗`: each entry is multiplied
/// by the inverse of the reduction. If the reduction is the annihilator the
/// result is the all-`1⊕` vector; if the semiring's expansion is not
/// invertible the vector is returned unchanged with `applied = false`.
pub fn normalize(s: &SemiringSpec, v: &[Value]) -> Result<Normalized, AlgebraError> {
    if !s.invertible {
        return Ok(Normalized {
            values: v.to_vec(),
            applied: false,
        });
    }
    let total = s.plus_fold(v)?;
    if s.is_one_plus(&total) {
        return Ok(Normalized {
            values: vec![s.one_plus.clone(); v.len()],
            applied: true,
        });
    }
    let inv = invert(s, &total)?;
    let values = v
        .iter()
        .map(|x| s.times(x, &inv))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Normalized {
        values,
        applied: true,
    })
}

/// True when `v` is a legal carrier element for `s`. Used by validation, not
/// enforced by the ops themselves (which only reject boolean/numeric mixes).
pub fn carrier_admits(s: &SemiringSpec, v: &Value) -> bool {
    match s.name {
        "sum-product" | "max-product" => match v {
            Value::Rational(r) => !r.is_negative(),
            Value::Float(f) => *f >= 0.0,
            Value::PosInf => true,
            _ => false,
        },
        "min-sum" => matches!(v, Value::Rational(_) | Value::Float(_) | Value::PosInf),
        "min-max" => v.is_numeric(),
        "or-and" | "xor-and" => v.is_boolean(),
        _ => true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_knows_all_six() {
        for name in [
            "sum-product",
            "max-product",
            "min-sum",
            "min-max",
            "or-and",
            "xor-and",
        ] {
            assert_eq!(registry_lookup(name).unwrap().name, name);
        }
        assert!(matches!(
            registry_lookup("tropical"),
            Err(AlgebraError::UnknownSemiring(_))
        ));
    }

    #[test]
    fn annihilators_absorb_under_expansion() {
        for s in SemiringSpec::all() {
            let (_one_times, one_plus) = annihilator_identity(&s);
            // 1⊕ ⊗ 1⊗ = 1⊕ and 1⊕ ⊕ 1⊗ = 1⊗ pin both roles.
            assert!(
                s.is_one_plus(&s.times(&one_plus, &s.one_times).unwrap()),
                "{}: annihilation",
                s.name
            );
            assert!(
                s.is_one_times(&s.plus(&one_plus, &s.one_times).unwrap()),
                "{}: ⊕ identity",
                s.name
            );
        }
    }

    #[test]
    fn condition_images_match_the_known_table() {
        let check = |name: &str, on_true: Value, on_false: Value| {
            let (t, f) = annihilator_identity(&registry_lookup(name).unwrap());
            assert_eq!(t, on_true, "{name} true image");
            assert_eq!(f, on_false, "{name} false image");
        };
        check("sum-product", Value::int(1), Value::int(0));
        check("min-sum", Value::int(0), Value::PosInf);
        check("min-max", Value::NegInf, Value::PosInf);
    }

    #[test]
    fn invert_rejects_annihilator_and_noninvertible_expansion() {
        let sp = SemiringSpec::sum_product();
        assert_eq!(invert(&sp, &Value::int(4)).unwrap(), Value::ratio(1, 4));
        assert!(matches!(
            invert(&sp, &Value::int(0)),
            Err(AlgebraError::DivisionByAnnihilator { .. })
        ));
        let mm = SemiringSpec::min_max();
        assert!(matches!(
            invert(&mm, &Value::int(3)),
            Err(AlgebraError::NotInvertible { .. })
        ));
        let ms = SemiringSpec::min_sum();
        assert_eq!(invert(&ms, &Value::int(3)).unwrap(), Value::int(-3));
        assert!(matches!(
            invert(&ms, &Value::NegInf),
            Err(AlgebraError::NoInverse { .. })
        ));
    }

    #[test]
    fn normalize_min_sum_shifts_minimum_to_zero() {
        let s = SemiringSpec::min_sum();
        let got = normalize(&s, &[Value::int(3), Value::int(5), Value::int(4)]).unwrap();
        assert!(got.applied);
        assert_eq!(got.values, vec![Value::int(0), Value::int(2), Value::int(1)]);
    }

    #[test]
    fn normalize_sum_product_yields_unit_mass() {
        let s = SemiringSpec::sum_product();
        let got = normalize(&s, &[Value::int(1), Value::int(3)]).unwrap();
        assert_eq!(got.values, vec![Value::ratio(1, 4), Value::ratio(3, 4)]);
    }

    #[test]
    fn normalize_annihilator_vector_stays_annihilator() {
        let s = SemiringSpec::sum_product();
        let got = normalize(&s, &[Value::int(0), Value::int(0)]).unwrap();
        assert!(got.applied);
        assert_eq!(got.values, vec![Value::int(0), Value::int(0)]);
    }

    #[test]
    fn normalize_skips_noninvertible_semirings() {
        let s = SemiringSpec::min_max();
        let v = [Value::int(2), Value::int(7)];
        let got = normalize(&s, &v).unwrap();
        assert!(!got.applied);
        assert_eq!(got.values, v.to_vec());
    }

    #[test]
    fn normalize_is_idempotent() {
        for s in [SemiringSpec::sum_product(), SemiringSpec::min_sum()] {
            let v = [Value::int(2), Value::int(5), Value::int(3)];
            let once = normalize(&s, &v).unwrap().values;
            let twice = normalize(&s, &once).unwrap().values;
            assert_eq!(once, twice, "{}", s.name);
        }
    }

    #[test]
    fn boolean_ops_reject_numerics() {
        let s = SemiringSpec::or_and();
        assert!(s.plus(&Value::Bool(true), &Value::int(1)).is_err());
        assert_eq!(
            s.times(&Value::Bool(true), &Value::Bool(false)).unwrap(),
            Value::Bool(false)
        );
        let x = SemiringSpec::xor_and();
        assert_eq!(
            x.plus(&Value::Bool(true), &Value::Bool(true)).unwrap(),
            Value::Bool(false)
        );
    }

    #[test]
    fn folds_start_from_identities() {
        let s = SemiringSpec::sum_product();
        assert_eq!(s.plus_fold([].iter()).unwrap(), Value::int(0));
        assert_eq!(s.times_fold([].iter()).unwrap(), Value::int(1));
        let mm = SemiringSpec::min_max();
        assert_eq!(mm.plus_fold([].iter()).unwrap(), Value::PosInf);
        assert_eq!(mm.times_fold([].iter()).unwrap(), Value::NegInf);
    }
}
