use std::fmt;
use std::sync::Arc;

use crate::syntax::{Literal, StreamType};

/// A runtime stream value.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Bool(bool),
    Int(i64),
    Double(f64),
    Str(Arc<str>),
}

impl Value {
    pub fn ty(&self) -> StreamType {
        match self {
            Value::Bool(_) => StreamType::Bool,
            Value::Int(_) => StreamType::Int,
            Value::Double(_) => StreamType::Double,
            Value::Str(_) => StreamType::String,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_double(&self) -> Option<f64> {
        match self {
            Value::Double(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Equality that treats doubles bitwise (so NaN equals itself).
    pub fn identical(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Double(a), Value::Double(b)) => a.to_bits() == b.to_bits(),
            _ => self == other,
        }
    }

    /// The neutral value of a type: false, 0, 0.0, "".
    pub fn zero(ty: StreamType) -> Value {
        match ty {
            StreamType::Bool => Value::Bool(false),
            StreamType::Int => Value::Int(0),
            StreamType::Double => Value::Double(0.0),
            StreamType::String => Value::Str(Arc::from("")),
        }
    }

    /// Heap bytes owned by this value beyond its inline size.
    pub fn payload_bytes(&self) -> usize {
        match self {
            Value::Str(s) => s.len(),
            _ => 0,
        }
    }
}

impl From<&Literal> for Value {
    fn from(lit: &Literal) -> Value {
        match lit {
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Int(v) => Value::Int(*v),
            Literal::Double(v) => Value::Double(*v),
            Literal::Str(s) => Value::Str(Arc::from(s.as_str())),
        }
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Value {
        Value::Bool(b)
    }
}

impl From<i64> for Value {
    fn from(v: i64) -> Value {
        Value::Int(v)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Value {
        Value::Double(v)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Value {
        Value::Str(Arc::from(s))
    }
}

/// Canonical text form, shared by notifications and log files. Doubles use
/// the shortest representation that parses back to the same bits; strings
/// are quoted with backslash escapes.
impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Double(v) => write!(f, "{v:?}"),
            Value::Str(s) => f.write_str(&crate::syntax::quote(s)),
        }
    }
}
