//! Builtin functions and keyword constants.

use std::sync::Arc;

use crate::engine::{ArithmeticError, Value};
use crate::syntax::{Keyword, StreamType};

use StreamType::{Double, Int, String as Str};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    MinInt,
    MaxInt,
    MinDouble,
    MaxDouble,
    Sqrt,
    Sin,
    Cos,
    Atan2,
    AbsInt,
    AbsDouble,
    Difference,
    Concat,
    IntOfDouble,
    DoubleOfInt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuiltinSignature {
    pub name: &'static str,
    pub params: &'static [StreamType],
    pub ret: StreamType,
    pub builtin: Builtin,
    /// False when some arguments produce a runtime error.
    pub total: bool,
}

const fn sig(
    name: &'static str,
    params: &'static [StreamType],
    ret: StreamType,
    builtin: Builtin,
    total: bool,
) -> BuiltinSignature {
    BuiltinSignature {
        name,
        params,
        ret,
        builtin,
        total,
    }
}

static CATALOG: &[BuiltinSignature] = &[
    sig("min", &[Int, Int], Int, Builtin::MinInt, true),
    sig("max", &[Int, Int], Int, Builtin::MaxInt, true),
    sig("min", &[Double, Double], Double, Builtin::MinDouble, true),
    sig("max", &[Double, Double], Double, Builtin::MaxDouble, true),
    sig("sqrt", &[Double], Double, Builtin::Sqrt, true),
    sig("sin", &[Double], Double, Builtin::Sin, true),
    sig("cos", &[Double], Double, Builtin::Cos, true),
    sig("atan2", &[Double, Double], Double, Builtin::Atan2, true),
    sig("abs", &[Int], Int, Builtin::AbsInt, false),
    sig("abs", &[Double], Double, Builtin::AbsDouble, true),
    sig(
        "difference",
        &[Double, Double],
        Double,
        Builtin::Difference,
        true,
    ),
    sig("concat", &[Str, Str], Str, Builtin::Concat, true),
    sig("int", &[Double], Int, Builtin::IntOfDouble, false),
    sig("double", &[Int], Double, Builtin::DoubleOfInt, true),
];

/// All builtin overloads.
pub fn provide_builtins() -> &'static [BuiltinSignature] {
    CATALOG
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CallError {
    #[error("unknown function `{0}`")]
    Unknown(String),
    #[error("`{name}` takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: String,
        found: usize,
    },
    #[error("no overload of `{name}` accepts ({})", args.iter().map(|t| t.name()).collect::<Vec<_>>().join(", "))]
    Types { name: String, args: Vec<StreamType> },
}

/// Finds the overload of `name` matching `args` exactly.
pub fn resolve(name: &str, args: &[StreamType]) -> Result<&'static BuiltinSignature, CallError> {
    let candidates: Vec<_> = CATALOG.iter().filter(|s| s.name == name).collect();
    if candidates.is_empty() {
        return Err(CallError::Unknown(name.to_string()));
    }
    if let Some(found) = candidates.iter().find(|s| s.params == args) {
        return Ok(found);
    }
    if !candidates.iter().any(|s| s.params.len() == args.len()) {
        let mut arities: Vec<usize> = candidates.iter().map(|s| s.params.len()).collect();
        arities.dedup();
        return Err(CallError::Arity {
            name: name.to_string(),
            expected: arities
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(" or "),
            found: args.len(),
        });
    }
    Err(CallError::Types {
        name: name.to_string(),
        args: args.to_vec(),
    })
}

fn double(v: &Value) -> f64 {
    match v {
        Value::Double(d) => *d,
        other => panic!("builtin expected double, got {other:?}"),
    }
}

fn int(v: &Value) -> i64 {
    match v {
        Value::Int(i) => *i,
        other => panic!("builtin expected int, got {other:?}"),
    }
}

// NaN propagates through min/max like through the arithmetic operators.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.min(b)
    }
}

impl Builtin {
    /// Applies the builtin to already type-checked arguments.
    pub fn apply(self, args: &[Value]) -> Result<Value, ArithmeticError> {
        Ok(match self {
            Builtin::MinInt => Value::Int(int(&args[0]).min(int(&args[1]))),
            Builtin::MaxInt => Value::Int(int(&args[0]).max(int(&args[1]))),
            Builtin::MinDouble => Value::Double(nan_min(double(&args[0]), double(&args[1]))),
            Builtin::MaxDouble => Value::Double(nan_max(double(&args[0]), double(&args[1]))),
            Builtin::Sqrt => Value::Double(double(&args[0]).sqrt()),
            Builtin::Sin => Value::Double(double(&args[0]).sin()),
            Builtin::Cos => Value::Double(double(&args[0]).cos()),
            Builtin::Atan2 => Value::Double(double(&args[0]).atan2(double(&args[1]))),
            Builtin::AbsInt => Value::Int(
                int(&args[0])
                    .checked_abs()
                    .ok_or(ArithmeticError::IntOverflow)?,
            ),
            Builtin::AbsDouble => Value::Double(double(&args[0]).abs()),
            Builtin::Difference => Value::Double((double(&args[0]) - double(&args[1])).abs()),
            Builtin::Concat => {
                let (a, b) = (args[0].as_str().unwrap(), args[1].as_str().unwrap());
                let mut s = String::with_capacity(a.len() + b.len());
                s.push_str(a);
                s.push_str(b);
                Value::Str(Arc::from(s))
            }
            Builtin::IntOfDouble => {
                let d = double(&args[0]).trunc();
                // i64::MAX as f64 rounds up to 2^63, which is out of range
                if d.is_nan() || d < i64::MIN as f64 || d >= i64::MAX as f64 {
                    return Err(ArithmeticError::InvalidCast);
                }
                Value::Int(d as i64)
            }
            Builtin::DoubleOfInt => Value::Double(int(&args[0]) as f64),
        })
    }
}

pub fn keyword_type(kw: Keyword) -> StreamType {
    match kw {
        Keyword::Position | Keyword::IntMin | Keyword::IntMax => Int,
        Keyword::DoubleMin | Keyword::DoubleMax => Double,
    }
}

/// Value of a constant keyword; `position` depends on the evaluation point.
pub fn keyword_value(kw: Keyword) -> Option<Value> {
    match kw {
        Keyword::Position => None,
        Keyword::IntMin => Some(Value::Int(i64::MIN)),
        Keyword::IntMax => Some(Value::Int(i64::MAX)),
        // most negative finite double, the identity of max
        Keyword::DoubleMin => Some(Value::Double(f64::MIN)),
        Keyword::DoubleMax => Some(Value::Double(f64::MAX)),
    }
}
