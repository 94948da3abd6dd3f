//! Reading solver models back into valuations.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::spec_lang::{parse_rational, Rational, SpecType, Valuation, Value};

use super::prepare::Prepared;
use super::smt::{len_symbol, symbol};

#[derive(Clone, Debug, PartialEq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().ok_or("unbalanced `)`")?;
                stack.last_mut().ok_or("unbalanced `)`")?.push(Sexp::List(done));
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' => {
                let mut s = String::from('"');
                for c in chars.by_ref() {
                    s.push(c);
                    if c == '"' {
                        break;
                    }
                }
                stack.last_mut().expect("nonempty").push(Sexp::Atom(s));
            }
            '|' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().expect("nonempty").push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {}
            c => {
                let mut s = String::from(c);
                while let Some(&n) = chars.peek() {
                    if n.is_whitespace() || n == '(' || n == ')' {
                        break;
                    }
                    s.push(n);
                    chars.next();
                }
                stack.last_mut().expect("nonempty").push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced `(`".into());
    }
    Ok(stack.pop().expect("one frame"))
}

#[derive(Clone, Debug, PartialEq)]
enum MVal {
    Bool(bool),
    Num(Rational),
}

struct Fun {
    params: Vec<String>,
    body: Sexp,
}

/// Function definitions of a `(get-model)` reply.
pub struct Model {
    funs: BTreeMap<String, Fun>,
}

const MAX_LEN: usize = 4096;

impl Model {
    pub fn parse(text: &str) -> Result<Model, String> {
        let mut funs = BTreeMap::new();
        let mut items = parse_sexps(text)?;
        // z3 wraps definitions in one list; some solvers prefix it with `model`.
        if items.len() == 1 {
            if let Sexp::List(inner) = &items[0] {
                if inner.iter().all(|i| matches!(i, Sexp::List(_)) || i == &Sexp::Atom("model".into())) {
                    items = inner.clone();
                }
            }
        }
        for item in items {
            let Sexp::List(parts) = item else { continue };
            if parts.first() != Some(&Sexp::Atom("define-fun".into())) || parts.len() != 5 {
                continue;
            }
            let (Sexp::Atom(name), Sexp::List(params)) = (&parts[1], &parts[2]) else { continue };
            let params = params
                .iter()
                .filter_map(|p| match p {
                    Sexp::List(pair) => match pair.first() {
                        Some(Sexp::Atom(n)) => Some(n.clone()),
                        _ => None,
                    },
                    _ => None,
                })
                .collect();
            funs.insert(name.clone(), Fun { params, body: parts[4].clone() });
        }
        Ok(Model { funs })
    }

    /// Values for every free name of `p`; names the model omits get defaults.
    pub fn valuation(&self, p: &Prepared) -> Result<Valuation, String> {
        let mut v = Valuation::new();
        for name in p.names() {
            let ty = p.type_of(&name).ok_or_else(|| format!("no type for `{name}`"))?.clone();
            let value = match &ty {
                SpecType::Array(elem) => {
                    let len = match self.funs.get(&len_symbol(&name)) {
                        Some(f) => self.num(&f.body, &BTreeMap::new())?,
                        None => Rational::zero(),
                    };
                    let len = len.to_integer().to_usize().filter(|n| *n <= MAX_LEN).ok_or("array too long")?;
                    let mut items = Vec::with_capacity(len);
                    for k in 0..len {
                        let at = Rational::from_integer(BigInt::from(k));
                        let item = match self.funs.get(&symbol(&name)) {
                            Some(f) => self.select(&f.body, &at, &BTreeMap::new())?,
                            None => default_of(elem),
                        };
                        items.push(to_value(item, elem));
                    }
                    Value::Array(items)
                }
                _ => match self.funs.get(&symbol(&name)) {
                    Some(f) => to_value(self.eval(&f.body, &BTreeMap::new())?, &ty),
                    None => Value::default_for(&ty),
                },
            };
            v.set(name, value);
        }
        Ok(v)
    }

    fn num(&self, e: &Sexp, env: &BTreeMap<String, MVal>) -> Result<Rational, String> {
        match self.eval(e, env)? {
            MVal::Num(r) => Ok(r),
            MVal::Bool(_) => Err("expected a number in the model".into()),
        }
    }

    fn eval(&self, e: &Sexp, env: &BTreeMap<String, MVal>) -> Result<MVal, String> {
        match e {
            Sexp::Atom(a) => {
                if let Some(v) = env.get(a) {
                    return Ok(v.clone());
                }
                match a.as_str() {
                    "true" => return Ok(MVal::Bool(true)),
                    "false" => return Ok(MVal::Bool(false)),
                    _ => {}
                }
                if let Ok(r) = parse_rational(a.trim_end_matches('?')) {
                    return Ok(MVal::Num(r));
                }
                match self.funs.get(a) {
                    Some(f) if f.params.is_empty() => self.eval(&f.body, &BTreeMap::new()),
                    _ => Err(format!("unknown model term `{a}`")),
                }
            }
            Sexp::List(items) => {
                let Some(Sexp::Atom(head)) = items.first() else { return Err("unsupported model term".into()) };
                let args = &items[1..];
                let nums = |me: &Self| args.iter().map(|a| me.num(a, env)).collect::<Result<Vec<_>, _>>();
                let bools = |me: &Self| {
                    args.iter()
                        .map(|a| match me.eval(a, env)? {
                            MVal::Bool(b) => Ok(b),
                            _ => Err("expected a truth value in the model".to_string()),
                        })
                        .collect::<Result<Vec<_>, _>>()
                };
                Ok(match head.as_str() {
                    "-" if args.len() == 1 => MVal::Num(-self.num(&args[0], env)?),
                    "-" => {
                        let ns = nums(self)?;
                        MVal::Num(ns[1..].iter().fold(ns[0].clone(), |acc, n| acc - n))
                    }
                    "+" => MVal::Num(nums(self)?.into_iter().fold(Rational::zero(), |a, b| a + b)),
                    "*" => MVal::Num(nums(self)?.into_iter().fold(Rational::one(), |a, b| a * b)),
                    "/" | "div" => {
                        let ns = nums(self)?;
                        if ns[1].is_zero() {
                            return Err("division by zero in model".into());
                        }
                        let q = &ns[0] / &ns[1];
                        MVal::Num(if head == "div" { q.floor() } else { q })
                    }
                    "to_real" | "to_int" => {
                        let n = self.num(&args[0], env)?;
                        MVal::Num(if head == "to_int" { n.floor() } else { n })
                    }
                    "ite" => match self.eval(&args[0], env)? {
                        MVal::Bool(true) => self.eval(&args[1], env)?,
                        MVal::Bool(false) => self.eval(&args[2], env)?,
                        _ => return Err("ite condition is not boolean".into()),
                    },
                    "=" => MVal::Bool(self.eval(&args[0], env)? == self.eval(&args[1], env)?),
                    "<" | "<=" | ">" | ">=" => {
                        let ns = nums(self)?;
                        MVal::Bool(match head.as_str() {
                            "<" => ns[0] < ns[1],
                            "<=" => ns[0] <= ns[1],
                            ">" => ns[0] > ns[1],
                            _ => ns[0] >= ns[1],
                        })
                    }
                    "and" => MVal::Bool(bools(self)?.into_iter().all(|b| b)),
                    "or" => MVal::Bool(bools(self)?.into_iter().any(|b| b)),
                    "not" => MVal::Bool(!bools(self)?[0]),
                    "root-obj" => MVal::Num(root_obj(&args[0], &args[1])?),
                    name => match self.funs.get(name) {
                        Some(f) if f.params.len() == args.len() => {
                            let mut inner = BTreeMap::new();
                            for (p, a) in f.params.iter().zip(args) {
                                inner.insert(p.clone(), self.eval(a, env)?);
                            }
                            self.eval(&f.body, &inner)?
                        }
                        _ => return Err(format!("unsupported model operator `{name}`")),
                    },
                })
            }
        }
    }

    /// Element `k` of an array-valued model term.
    fn select(&self, e: &Sexp, k: &Rational, env: &BTreeMap<String, MVal>) -> Result<MVal, String> {
        match e {
            Sexp::Atom(a) => match self.funs.get(a) {
                Some(f) if f.params.is_empty() => self.select(&f.body, k, &BTreeMap::new()),
                Some(f) if f.params.len() == 1 => {
                    self.eval(&f.body, &BTreeMap::from([(f.params[0].clone(), MVal::Num(k.clone()))]))
                }
                _ => Err(format!("unknown array `{a}` in model")),
            },
            Sexp::List(items) => match items.as_slice() {
                [Sexp::List(head), v] if head.get(1) == Some(&Sexp::Atom("const".into())) => self.eval(v, env),
                [Sexp::Atom(s), a, i, v] if s == "store" => {
                    if self.num(i, env)? == *k {
                        self.eval(v, env)
                    } else {
                        self.select(a, k, env)
                    }
                }
                [Sexp::Atom(s), c, a, b] if s == "ite" => match self.eval(c, env)? {
                    MVal::Bool(true) => self.select(a, k, env),
                    _ => self.select(b, k, env),
                },
                [Sexp::Atom(u), Sexp::Atom(asa), Sexp::Atom(f)] if u == "_" && asa == "as-array" => {
                    self.select(&Sexp::Atom(f.clone()), k, env)
                }
                [Sexp::Atom(l), Sexp::List(params), body] if l == "lambda" => {
                    let Some(Sexp::List(p)) = params.first() else { return Err("bad lambda".into()) };
                    let Some(Sexp::Atom(p)) = p.first() else { return Err("bad lambda".into()) };
                    let mut inner = env.clone();
                    inner.insert(p.clone(), MVal::Num(k.clone()));
                    self.eval(body, &inner)
                }
                _ => Err("unsupported array term in model".into()),
            },
        }
    }
}

fn default_of(ty: &SpecType) -> MVal {
    match ty {
        SpecType::Bool => MVal::Bool(false),
        _ => MVal::Num(Rational::zero()),
    }
}

fn to_value(v: MVal, ty: &SpecType) -> Value {
    match (v, ty) {
        (MVal::Bool(b), _) => Value::Bool(b),
        (MVal::Num(r), _) => Value::Num(r),
    }
}

/// The `index`-th real root (1-based, ascending) of a univariate polynomial, rounded to a rational.
fn root_obj(poly: &Sexp, index: &Sexp) -> Result<Rational, String> {
    fn eval(p: &Sexp, x: f64) -> Result<f64, String> {
        match p {
            Sexp::Atom(a) if a == "x" => Ok(x),
            Sexp::Atom(a) => parse_rational(a).map(|r| r.to_f64().unwrap_or(f64::NAN)).map_err(|e| e.to_string()),
            Sexp::List(items) => {
                let Some(Sexp::Atom(head)) = items.first() else { return Err("bad polynomial".into()) };
                let xs = items[1..].iter().map(|i| eval(i, x)).collect::<Result<Vec<_>, _>>()?;
                Ok(match head.as_str() {
                    "+" => xs.iter().sum(),
                    "*" => xs.iter().product(),
                    "-" if xs.len() == 1 => -xs[0],
                    "-" => xs[1..].iter().fold(xs[0], |a, b| a - b),
                    "^" => xs[0].powf(xs[1]),
                    "/" => xs[0] / xs[1],
                    other => return Err(format!("unsupported polynomial operator `{other}`")),
                })
            }
        }
    }
    let Sexp::Atom(k) = index else { return Err("bad root index".into()) };
    let k: usize = k.parse().map_err(|_| "bad root index")?;
    let mut roots = Vec::new();
    let (lo, hi, steps) = (-1.0e4_f64, 1.0e4_f64, 400_000);
    let h = (hi - lo) / steps as f64;
    let mut prev = eval(poly, lo)?;
    for s in 1..=steps {
        let x = lo + h * s as f64;
        let cur = eval(poly, x)?;
        if cur == 0.0 {
            roots.push(x);
        } else if prev != 0.0 && prev.signum() != cur.signum() {
            let (mut a, mut b) = (x - h, x);
            for _ in 0..200 {
                let m = (a + b) / 2.0;
                if eval(poly, m)?.signum() == eval(poly, a)?.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push((a + b) / 2.0);
        }
        prev = cur;
    }
    let r = roots.get(k.wrapping_sub(1)).ok_or("root index out of range")?;
    Rational::from_float(*r).ok_or_else(|| "non-finite root".into())
}

/// Rationals near `r`: itself and roundings to small denominators.
pub fn neighbours(r: &Rational) -> Vec<Rational> {
    let mut out = vec![r.clone()];
    for d in [1i64, 2, 4, 8, 10, 16, 100, 1000] {
        let d = Rational::from_integer(d.into());
        let scaled = r * &d;
        for c in [scaled.floor(), scaled.ceil(), scaled.floor() - Rational::one(), scaled.ceil() + Rational::one()] {
            let v = c / &d;
            if !out.contains(&v) {
                out.push(v);
            }
        }
    }
    out.retain(|v| !(v.is_negative() && !r.is_negative() && v.abs() > Rational::one()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_lang::{parse_params, parse_spec_expr};

    #[test]
    fn reads_z3_shapes() {
        let env = parse_params("(N:float) (i:int) (b:bool) (a:array int) (c:array int)").unwrap();
        let h = parse_spec_expr("b /\\ i = 2 /\\ a[0] = c[1]", &env).unwrap();
        let c = parse_spec_expr("N > 0", &env).unwrap();
        let p = Prepared::from_parts(&h, &c, &env);
        let text = "(
  (define-fun N () Real (/ (- 1.0) 2.0))
  (define-fun i () Int 2)
  (define-fun b () Bool true)
  (define-fun len.a () Int 2)
  (define-fun len.c () Int 3)
  (define-fun k!0 ((x!0 Int)) Int (ite (= x!0 1) 5 7))
  (define-fun u.a () (Array Int Int) (store ((as const (Array Int Int)) 0) 1 9))
  (define-fun u.c () (Array Int Int) (_ as-array k!0))
)";
        let text = text.replace("define-fun N ", "define-fun u.N ").replace("define-fun i ", "define-fun u.i ").replace("define-fun b ", "define-fun u.b ");
        let v = Model::parse(&text).unwrap().valuation(&p).unwrap();
        assert_eq!(v.to_string(), "N = -1/2, a = [0, 9], b = true, c = [7, 5, 7], i = 2");
    }

    #[test]
    fn lambda_and_root() {
        let m = Model::parse("((define-fun u.a () (Array Int Int) (lambda ((x!1 Int)) (ite (= x!1 0) 4 1))) (define-fun len.a () Int 2) (define-fun u.r () Real (root-obj (+ (^ x 2) (- 2)) 2)))").unwrap();
        let env = parse_params("(a:array int) (r:float)").unwrap();
        let p = Prepared::from_parts(&parse_spec_expr("a[0] = 1 /\\ r > 0", &env).unwrap(), &crate::spec_lang::SpecExpr::Bool(false), &env);
        let v = m.valuation(&p).unwrap();
        assert_eq!(v.get("a"), Some(&Value::Array(vec![Value::int(4), Value::int(1)])));
        let r = v.get("r").unwrap().as_num().unwrap().to_f64().unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn neighbour_grid() {
        let n = neighbours(&parse_rational("0.7071").unwrap());
        assert!(n.contains(&parse_rational("1/2").unwrap()));
        assert!(n.contains(&parse_rational("1").unwrap()));
    }
}
