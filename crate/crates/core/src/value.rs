//! Runtime scalars and declared value domains.

use alloc::string::String;
use core::fmt;

/// A value produced by the interpreter.
///
/// Equality is exact; floats compare bitwise so that trajectories containing
/// `NaN` are still equal to themselves.
#[derive(Debug, Clone)]
pub enum Scalar {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Bool(a), Scalar::Bool(b)) => a == b,
            (Scalar::Int(a), Scalar::Int(b)) => a == b,
            (Scalar::Float(a), Scalar::Float(b)) => a.to_bits() == b.to_bits(),
            (Scalar::Str(a), Scalar::Str(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Scalar {}

impl Scalar {
    pub fn type_name(&self) -> &'static str {
        match self {
            Scalar::Bool(_) => "bool",
            Scalar::Int(_) => "int",
            Scalar::Float(_) => "float",
            Scalar::Str(_) => "string",
        }
    }

    /// Numeric view used when pooling oracle values for Gaussian sampling.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Scalar::Int(v) => Some(*v as f64),
            Scalar::Float(v) => Some(*v),
            _ => None,
        }
    }

    /// Feeds a canonical byte encoding of the value into `out`.
    ///
    /// The encoding is unambiguous across variants and is what trajectory
    /// fingerprints and cache keys are computed from.
    pub fn encode_into(&self, out: &mut alloc::vec::Vec<u8>) {
        match self {
            Scalar::Bool(b) => {
                out.push(0);
                out.push(*b as u8);
            }
            Scalar::Int(v) => {
                out.push(1);
                out.extend_from_slice(&v.to_le_bytes());
            }
            Scalar::Float(v) => {
                out.push(2);
                out.extend_from_slice(&v.to_bits().to_le_bytes());
            }
            Scalar::Str(s) => {
                out.push(3);
                out.extend_from_slice(&(s.len() as u64).to_le_bytes());
                out.extend_from_slice(s.as_bytes());
            }
        }
    }
}

/// Text form shared by the suite format, printed output and reports.
///
/// Strings are quoted with backslash escapes; floats always carry a decimal
/// point or exponent so they never read back as integers.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Bool(b) => write!(f, "{}", b),
            Scalar::Int(v) => write!(f, "{}", v),
            Scalar::Float(v) => {
                if v.is_finite() {
                    write!(f, "{:?}", v)
                } else if v.is_nan() {
                    f.write_str("nan")
                } else if *v > 0.0 {
                    f.write_str("inf")
                } else {
                    f.write_str("-inf")
                }
            }
            Scalar::Str(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        '\n' => f.write_str("\\n")?,
                        '\t' => f.write_str("\\t")?,
                        '\r' => f.write_str("\\r")?,
                        c => write!(f, "{}", c)?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

/// The set of values a node may take, which decides how it is mutated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Bool,
    Int,
    Float,
    Str,
    /// Inclusive integer range known from domain knowledge.
    BoundedInt { lo: i64, hi: i64 },
}

impl Domain {
    /// Domain inferred from a value when none is declared.
    pub fn of(value: &Scalar) -> Domain {
        match value {
            Scalar::Bool(_) => Domain::Bool,
            Scalar::Int(_) => Domain::Int,
            Scalar::Float(_) => Domain::Float,
            Scalar::Str(_) => Domain::Str,
        }
    }

    pub fn admits(&self, value: &Scalar) -> bool {
        match (self, value) {
            (Domain::Bool, Scalar::Bool(_)) => true,
            (Domain::Int, Scalar::Int(_)) => true,
            (Domain::Float, Scalar::Float(_)) => true,
            (Domain::Str, Scalar::Str(_)) => true,
            (Domain::BoundedInt { lo, hi }, Scalar::Int(v)) => lo <= v && v <= hi,
            _ => false,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Bool => f.write_str("bool"),
            Domain::Int => f.write_str("int"),
            Domain::Float => f.write_str("float"),
            Domain::Str => f.write_str("string"),
            Domain::BoundedInt { lo, hi } => write!(f, "bounded-int({},{})", lo, hi),
        }
    }
}
