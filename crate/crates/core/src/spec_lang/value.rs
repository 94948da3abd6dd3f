use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use super::types::SpecType;
use super::Rational;

/// A concrete value: exact rational for every numeric type.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Bool(bool),
    Num(Rational),
    Array(Vec<Value>),
}

impl Value {
    pub fn int(n: i64) -> Self {
        Value::Num(Rational::from_integer(n.into()))
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn as_num(&self) -> Option<&Rational> {
        match self {
            Value::Num(r) => Some(r),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[Value]> {
        match self {
            Value::Array(v) => Some(v),
            _ => None,
        }
    }

    /// Whether the value inhabits `ty` (nat values must be non-negative integers).
    pub fn inhabits(&self, ty: &SpecType) -> bool {
        match (self, ty) {
            (Value::Bool(_), SpecType::Bool) => true,
            (Value::Num(r), SpecType::Nat) => r.is_integer() && !r.is_negative(),
            (Value::Num(r), SpecType::Int) => r.is_integer(),
            (Value::Num(_), SpecType::Float) => true,
            (Value::Array(items), SpecType::Array(elem)) => items.iter().all(|v| v.inhabits(elem)),
            _ => false,
        }
    }

    /// Default inhabitant used for names a model leaves unconstrained.
    pub fn default_for(ty: &SpecType) -> Value {
        match ty {
            SpecType::Bool => Value::Bool(false),
            SpecType::Array(_) => Value::Array(Vec::new()),
            _ => Value::Num(Rational::zero()),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bool(b) => write!(f, "{b}"),
            Value::Num(r) => write!(f, "{r}"),
            Value::Array(items) => {
                write!(f, "[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid value `{text}`: {reason}")]
pub struct ValueParseError {
    pub text: String,
    pub reason: String,
}

fn value_err(text: &str, reason: impl Into<String>) -> ValueParseError {
    ValueParseError { text: text.to_string(), reason: reason.into() }
}

/// Parses an exact rational written as an integer, `p/q` or a decimal.
pub fn parse_rational(text: &str) -> Result<Rational, ValueParseError> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest.trim()),
        None => (false, t),
    };
    let r = if let Some((p, q)) = body.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|e| value_err(t, e.to_string()))?;
        let q = BigInt::from_str(q.trim()).map_err(|e| value_err(t, e.to_string()))?;
        if q.is_zero() {
            return Err(value_err(t, "zero denominator"));
        }
        Rational::new(p, q)
    } else if let Some((whole, frac)) = body.split_once('.') {
        let digits = format!("{whole}{frac}");
        let n = BigInt::from_str(&digits).map_err(|e| value_err(t, e.to_string()))?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        Rational::new(n, d)
    } else {
        Rational::from_integer(BigInt::from_str(body).map_err(|e| value_err(t, e.to_string()))?)
    };
    Ok(if neg { -r } else { r })
}

/// Splits on commas that are not nested inside brackets or parentheses.
pub(crate) fn split_top_level(text: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

impl FromStr for Value {
    type Err = ValueParseError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let t = text.trim();
        match t {
            "true" | "True" => return Ok(Value::Bool(true)),
            "false" | "False" => return Ok(Value::Bool(false)),
            _ => {}
        }
        if let Some(inner) = t.strip_prefix('[') {
            let inner = inner
                .strip_suffix(']')
                .ok_or_else(|| value_err(t, "unterminated array literal"))?;
            if inner.trim().is_empty() {
                return Ok(Value::Array(Vec::new()));
            }
            return split_top_level(inner, ',')
                .into_iter()
                .map(Value::from_str)
                .collect::<Result<Vec<_>, _>>()
                .map(Value::Array);
        }
        parse_rational(t).map(Value::Num)
    }
}

/// Assignment of concrete values to names.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Valuation(pub BTreeMap<String, Value>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.0.get(name)
    }

    pub fn set(&mut self, name: impl Into<String>, v: Value) {
        self.0.insert(name.into(), v);
    }

    pub fn with(mut self, name: impl Into<String>, v: Value) -> Self {
        self.set(name, v);
        self
    }

    pub fn remove(&mut self, name: &str) -> Option<Value> {
        self.0.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Value)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses `name = value, name = value`.
    pub fn parse_bindings(text: &str) -> Result<Valuation, ValueParseError> {
        let mut out = Valuation::new();
        if text.trim().is_empty() {
            return Ok(out);
        }
        for part in split_top_level(text, ',') {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| value_err(part, "expected `name = value`"))?;
            let name = name.trim();
            if name.is_empty() {
                return Err(value_err(part, "empty name"));
            }
            out.set(name, value.parse()?);
        }
        Ok(out)
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

impl FromIterator<(String, Value)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (String, Value)>>(iter: I) -> Self {
        Valuation(iter.into_iter().collect())
    }
}

/// Finite carriers that bounded quantifiers range over.
pub trait Carriers {
    /// Values a name of the given type ranges over.
    fn carrier(&self, name: &str, ty: &SpecType) -> Result<Vec<Value>, String>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_forms() {
        assert_eq!(parse_rational("1/2").unwrap(), Rational::new(1.into(), 2.into()));
        assert_eq!(parse_rational("-0.25").unwrap(), Rational::new((-1).into(), 4.into()));
        assert_eq!(parse_rational("7").unwrap(), Rational::from_integer(7.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn bindings_round_trip_through_display() {
        let v = Valuation::parse_bindings("N = 1/2, a = [1, -2, 3], b = true").unwrap();
        assert_eq!(v.to_string(), "N = 1/2, a = [1, -2, 3], b = true");
        assert_eq!(Valuation::parse_bindings(&v.to_string()).unwrap(), v);
    }

    #[test]
    fn nat_inhabitation() {
        assert!(Value::int(3).inhabits(&SpecType::Nat));
        assert!(!Value::int(-3).inhabits(&SpecType::Nat));
        assert!(!Value::Num(parse_rational("1/2").unwrap()).inhabits(&SpecType::Int));
    }
}
