//! Finite carriers for bounded checking.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::spec_lang::{parse_rational, Carriers, Rational, SpecType, Valuation, Value};

/// Per-type carriers plus per-name overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub int: (i64, i64),
    pub nat: (i64, i64),
    pub float: Vec<Rational>,
    pub array_len: (usize, usize),
    pub vars: BTreeMap<String, Vec<Value>>,
    /// Maximum number of enumeration steps before giving up.
    pub budget: u64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        let grid = ["-1", "0", "1/2", "1", "3/2", "2", "3", "4", "5"];
        DomainSpec {
            int: (-3, 3),
            nat: (0, 4),
            float: grid.iter().map(|g| parse_rational(g).expect("grid literal")).collect(),
            array_len: (0, 3),
            vars: BTreeMap::new(),
            budget: 10_000_000,
        }
    }
}

/// A literal in a domain file: integers, rational strings like `"1/2"`, booleans or lists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Bool(bool),
    Int(i64),
    Text(String),
    List(Vec<Literal>),
}

impl Literal {
    pub fn to_value(&self) -> Result<Value, String> {
        Ok(match self {
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Int(n) => Value::int(*n),
            Literal::Text(t) => match t.trim() {
                "true" => Value::Bool(true),
                "false" => Value::Bool(false),
                other => Value::Num(parse_rational(other).map_err(|e| e.to_string())?),
            },
            Literal::List(items) => Value::Array(items.iter().map(Literal::to_value).collect::<Result<_, _>>()?),
        })
    }

    pub fn from_value(v: &Value) -> Literal {
        match v {
            Value::Bool(b) => Literal::Bool(*b),
            Value::Num(r) if r.is_integer() && r.to_integer().bits() < 63 => {
                Literal::Int(r.to_integer().try_into().expect("fits in i64"))
            }
            Value::Num(r) => Literal::Text(crate::spec_lang::render_rational(r)),
            Value::Array(items) => Literal::List(items.iter().map(Literal::from_value).collect()),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DomainFile {
    int: Option<(i64, i64)>,
    nat: Option<(i64, i64)>,
    float: Option<Vec<Literal>>,
    array_len: Option<(usize, usize)>,
    budget: Option<u64>,
    #[serde(default)]
    vars: BTreeMap<String, Vec<Literal>>,
}

impl DomainSpec {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let f: DomainFile = toml::from_str(text).map_err(|e| e.to_string())?;
        let d = DomainSpec::default();
        let values = |ls: &[Literal]| ls.iter().map(Literal::to_value).collect::<Result<Vec<_>, _>>();
        let float = match &f.float {
            Some(ls) => values(ls)?
                .into_iter()
                .map(|v| v.as_num().cloned().ok_or_else(|| format!("float grid value {v} is not a number")))
                .collect::<Result<_, _>>()?,
            None => d.float,
        };
        let mut vars = BTreeMap::new();
        for (name, ls) in &f.vars {
            vars.insert(name.clone(), values(ls)?);
        }
        let spec = DomainSpec {
            int: f.int.unwrap_or(d.int),
            nat: f.nat.unwrap_or(d.nat),
            float,
            array_len: f.array_len.unwrap_or(d.array_len),
            vars,
            budget: f.budget.unwrap_or(d.budget),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        let f = DomainFile {
            int: Some(self.int),
            nat: Some(self.nat),
            float: Some(self.float.iter().map(|r| Literal::from_value(&Value::Num(r.clone()))).collect()),
            array_len: Some(self.array_len),
            budget: Some(self.budget),
            vars: self
                .vars
                .iter()
                .map(|(k, vs)| (k.clone(), vs.iter().map(Literal::from_value).collect()))
                .collect(),
        };
        toml::to_string(&f).expect("domain serializes")
    }

    /// Carriers must be nonempty and grid values distinct.
    pub fn validate(&self) -> Result<(), String> {
        if self.int.0 > self.int.1 || self.nat.0 > self.nat.1 || self.array_len.0 > self.array_len.1 {
            return Err("empty interval in domain".into());
        }
        if self.nat.0 < 0 {
            return Err("nat interval must be non-negative".into());
        }
        if self.float.is_empty() {
            return Err("empty float grid".into());
        }
        let mut seen = self.float.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.float.len() {
            return Err("float grid values must be distinct".into());
        }
        for (name, vs) in &self.vars {
            if vs.is_empty() {
                return Err(format!("empty carrier for `{name}`"));
            }
        }
        Ok(())
    }

    /// Carrier for a name, falling back to its type. `x_0` shares the carrier of `x`.
    pub fn values_for(&self, name: &str, ty: &SpecType) -> Vec<Value> {
        if let Some(vs) = self.vars.get(name) {
            return vs.clone();
        }
        if let Some(vs) = name.strip_suffix("_0").and_then(|base| self.vars.get(base)) {
            return vs.clone();
        }
        self.values_of(ty)
    }

    /// Carrier for a type. Integral carriers reach every index of the longest array.
    pub fn values_of(&self, ty: &SpecType) -> Vec<Value> {
        let top = self.array_len.1 as i64;
        match ty {
            SpecType::Bool => vec![Value::Bool(false), Value::Bool(true)],
            SpecType::Nat => (self.nat.0..=self.nat.1.max(top)).map(Value::int).collect(),
            SpecType::Int => (self.int.0..=self.int.1.max(top)).map(Value::int).collect(),
            SpecType::Float => self.float.iter().cloned().map(Value::Num).collect(),
            SpecType::Array(elem) => {
                let elems = match &**elem {
                    SpecType::Nat => (self.nat.0..=self.nat.1).map(Value::int).collect(),
                    SpecType::Int => (self.int.0..=self.int.1).map(Value::int).collect(),
                    other => self.values_of(other),
                };
                let mut out = Vec::new();
                for len in self.array_len.0..=self.array_len.1 {
                    if elems.is_empty() && len > 0 {
                        continue;
                    }
                    let mut idx = vec![0usize; len];
                    'odometer: loop {
                        out.push(Value::Array(idx.iter().map(|k| elems[*k].clone()).collect()));
                        let mut pos = len;
                        loop {
                            if pos == 0 {
                                break 'odometer;
                            }
                            pos -= 1;
                            idx[pos] += 1;
                            if idx[pos] < elems.len() {
                                break;
                            }
                            idx[pos] = 0;
                        }
                    }
                }
                out
            }
        }
    }

    /// Whether every scalar of `v` lies in this domain's carriers.
    pub fn contains(&self, v: &Valuation, env: &[crate::spec_lang::TypedParam]) -> bool {
        v.iter().all(|(name, value)| match env.iter().find(|p| &p.name == name) {
            Some(p) => self.values_for(name, &p.ty).contains(value),
            None => true,
        })
    }
}

impl Carriers for DomainSpec {
    fn carrier(&self, _name: &str, ty: &SpecType) -> Result<Vec<Value>, String> {
        Ok(self.values_of(ty))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let text = "float = [\"0\", \"1/2\", 1]\narray_len = [1, 2]\n[vars]\ne = [\"1/2\"]\na = [[1, 2]]\n";
        let d = DomainSpec::from_toml(text).unwrap();
        assert_eq!(d.float.len(), 3);
        assert_eq!(d.vars["a"], vec![Value::Array(vec![Value::int(1), Value::int(2)])]);
        assert_eq!(DomainSpec::from_toml(&d.to_toml()).unwrap(), d);
        assert!(DomainSpec::from_toml("float = [\"1\", \"1\"]").is_err());
        assert!(DomainSpec::from_toml("colour = 1").is_err());
    }

    #[test]
    fn array_carrier_counts() {
        let d = DomainSpec { int: (0, 1), array_len: (0, 2), ..DomainSpec::default() };
        assert_eq!(d.values_of(&SpecType::array(SpecType::Int)).len(), 1 + 2 + 4);
        assert_eq!(d.values_of(&SpecType::Nat).len(), 5);
    }
}
