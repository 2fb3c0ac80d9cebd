use alloc::format;
use alloc::string::{String, ToString};

use crate::value::Scalar;

fn num(name: &str, v: &Scalar) -> Result<f64, String> {
    v.as_f64()
        .ok_or_else(|| format!("{}: expected a number, got {}", name, v.type_name()))
}

fn string<'a>(name: &str, v: &'a Scalar) -> Result<&'a str, String> {
    match v {
        Scalar::Str(s) => Ok(s),
        _ => Err(format!("{}: expected a string, got {}", name, v.type_name())),
    }
}

/// Evaluates a pure builtin other than `read`.
pub fn call(name: &str, args: &[Scalar]) -> Result<Scalar, String> {
    Ok(match (name, args) {
        ("len", [s]) => Scalar::Int(string(name, s)?.chars().count() as i64),
        ("strip", [s]) => Scalar::Str(string(name, s)?.trim().to_string()),
        ("lstrip", [s]) => Scalar::Str(string(name, s)?.trim_start().to_string()),
        ("rstrip", [s]) => Scalar::Str(string(name, s)?.trim_end().to_string()),
        ("endswith", [s, suffix]) => Scalar::Bool(string(name, s)?.ends_with(string(name, suffix)?)),
        ("startswith", [s, prefix]) => {
            Scalar::Bool(string(name, s)?.starts_with(string(name, prefix)?))
        }
        ("abs", [Scalar::Int(v)]) => Scalar::Int(
            v.checked_abs()
                .ok_or_else(|| "abs: integer overflow".to_string())?,
        ),
        ("abs", [v]) => Scalar::Float(libm::fabs(num(name, v)?)),
        ("min", [Scalar::Int(a), Scalar::Int(b)]) => Scalar::Int(*a.min(b)),
        ("max", [Scalar::Int(a), Scalar::Int(b)]) => Scalar::Int(*a.max(b)),
        ("min", [a, b]) => Scalar::Float(libm::fmin(num(name, a)?, num(name, b)?)),
        ("max", [a, b]) => Scalar::Float(libm::fmax(num(name, a)?, num(name, b)?)),
        ("int", [v]) => Scalar::Int(match v {
            Scalar::Int(v) => *v,
            Scalar::Bool(b) => *b as i64,
            Scalar::Float(f) => {
                if !f.is_finite() || libm::fabs(*f) >= 9.2e18 {
                    return Err("int: float out of range".to_string());
                }
                *f as i64
            }
            Scalar::Str(s) => s
                .trim()
                .parse()
                .map_err(|_| format!("int: cannot parse {:?}", s))?,
        }),
        ("float", [v]) => Scalar::Float(match v {
            Scalar::Bool(b) => *b as i64 as f64,
            Scalar::Str(s) => s
                .trim()
                .parse()
                .map_err(|_| format!("float: cannot parse {:?}", s))?,
            v => num(name, v)?,
        }),
        ("str", [v]) => Scalar::Str(match v {
            Scalar::Str(s) => s.clone(),
            v => v.to_string(),
        }),
        _ => return Err(format!("bad call to builtin '{}'", name)),
    })
}
