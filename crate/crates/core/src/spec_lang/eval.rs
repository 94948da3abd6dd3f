use num_traits::{Signed, ToPrimitive, Zero};

use super::expr::{ArithOp, Quantifier, RelOp, SpecExpr};
use super::value::{Carriers, Valuation, Value};
use super::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: String, len: usize },
    #[error("slice [{lo}:{hi}) invalid for length {len}")]
    BadSlice { lo: String, hi: String, len: usize },
    #[error("quantifier over `{0}` has no finite domain: {1}")]
    UnboundedQuantifier(String, String),
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("uninterpreted predicate `{0}`")]
    UndefinedPredicate(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
}

/// Evaluates `e` with exact rational arithmetic.
///
/// `state` supplies current values, `pre_state` the values read by `Init`
/// nodes, and `domains` the finite carriers quantifiers enumerate.
/// Conjunction, disjunction and implication short-circuit left to right.
pub fn eval_spec(
    e: &SpecExpr,
    state: &Valuation,
    pre_state: &Valuation,
    domains: &dyn Carriers,
) -> Result<Value, EvalError> {
    let mut ev = Evaluator { pre_state, domains, locals: Vec::new() };
    ev.eval(e, state)
}

/// Convenience wrapper for formulas.
pub fn eval_bool(
    e: &SpecExpr,
    state: &Valuation,
    pre_state: &Valuation,
    domains: &dyn Carriers,
) -> Result<bool, EvalError> {
    match eval_spec(e, state, pre_state, domains)? {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::TypeMismatch(format!("expected bool, got {other}"))),
    }
}

struct Evaluator<'a> {
    pre_state: &'a Valuation,
    domains: &'a dyn Carriers,
    locals: Vec<(String, Value)>,
}

fn num(v: Value) -> Result<Rational, EvalError> {
    match v {
        Value::Num(r) => Ok(r),
        other => Err(EvalError::TypeMismatch(format!("expected a number, got {other}"))),
    }
}

fn boolean(v: Value) -> Result<bool, EvalError> {
    match v {
        Value::Bool(b) => Ok(b),
        other => Err(EvalError::TypeMismatch(format!("expected bool, got {other}"))),
    }
}

fn array(v: Value) -> Result<Vec<Value>, EvalError> {
    match v {
        Value::Array(items) => Ok(items),
        other => Err(EvalError::TypeMismatch(format!("expected an array, got {other}"))),
    }
}

fn index_of(r: &Rational, len: usize) -> Result<usize, EvalError> {
    let oob = || EvalError::IndexOutOfBounds { index: r.to_string(), len };
    if !r.is_integer() || r.is_negative() {
        return Err(oob());
    }
    let i = r.to_integer().to_usize().ok_or_else(oob)?;
    if i < len {
        Ok(i)
    } else {
        Err(oob())
    }
}

fn bound_of(r: &Rational, len: usize) -> Option<usize> {
    if !r.is_integer() || r.is_negative() {
        return None;
    }
    r.to_integer().to_usize().filter(|i| *i <= len)
}

pub(crate) fn compare(op: RelOp, a: &Value, b: &Value) -> Result<bool, EvalError> {
    match op {
        RelOp::Eq => Ok(a == b),
        RelOp::Ne => Ok(a != b),
        _ => {
            let (Value::Num(x), Value::Num(y)) = (a, b) else {
                return Err(EvalError::TypeMismatch(format!("cannot order {a} and {b}")));
            };
            Ok(match op {
                RelOp::Lt => x < y,
                RelOp::Le => x <= y,
                RelOp::Gt => x > y,
                RelOp::Ge => x >= y,
                RelOp::Eq | RelOp::Ne => unreachable!(),
            })
        }
    }
}

impl Evaluator<'_> {
    fn lookup(&self, name: &str, state: &Valuation) -> Result<Value, EvalError> {
        if let Some((_, v)) = self.locals.iter().rev().find(|(n, _)| n == name) {
            return Ok(v.clone());
        }
        state.get(name).cloned().ok_or_else(|| EvalError::Unbound(name.to_string()))
    }

    fn eval(&mut self, e: &SpecExpr, state: &Valuation) -> Result<Value, EvalError> {
        match e {
            SpecExpr::Num(r) => Ok(Value::Num(r.clone())),
            SpecExpr::Bool(b) => Ok(Value::Bool(*b)),
            SpecExpr::Var(n) | SpecExpr::Const(n) => self.lookup(n, state),
            SpecExpr::Init(inner) => {
                // Bound names stay visible inside the snapshot.
                let pre = self.pre_state;
                self.eval(inner, pre)
            }
            SpecExpr::Neg(inner) => Ok(Value::Num(-num(self.eval(inner, state)?)?)),
            SpecExpr::Arith(op, a, b) => {
                let x = num(self.eval(a, state)?)?;
                let y = num(self.eval(b, state)?)?;
                Ok(Value::Num(match op {
                    ArithOp::Add => x + y,
                    ArithOp::Sub => x - y,
                    ArithOp::Mul => x * y,
                    ArithOp::Div => {
                        if y.is_zero() {
                            return Err(EvalError::DivisionByZero(e.to_string()));
                        }
                        x / y
                    }
                }))
            }
            SpecExpr::Rel(op, a, b) => {
                let x = self.eval(a, state)?;
                let y = self.eval(b, state)?;
                Ok(Value::Bool(compare(*op, &x, &y)?))
            }
            SpecExpr::Not(inner) => Ok(Value::Bool(!boolean(self.eval(inner, state)?)?)),
            SpecExpr::And(items) => {
                for item in items {
                    if !boolean(self.eval(item, state)?)? {
                        return Ok(Value::Bool(false));
                    }
                }
                Ok(Value::Bool(true))
            }
            SpecExpr::Or(items) => {
                for item in items {
                    if boolean(self.eval(item, state)?)? {
                        return Ok(Value::Bool(true));
                    }
                }
                Ok(Value::Bool(false))
            }
            SpecExpr::Implies(a, b) => {
                if !boolean(self.eval(a, state)?)? {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(boolean(self.eval(b, state)?)?))
            }
            SpecExpr::Quant(q, p, body) => {
                let carrier = self
                    .domains
                    .carrier(&p.name, &p.ty)
                    .map_err(|why| EvalError::UnboundedQuantifier(p.name.clone(), why))?;
                let want = matches!(q, Quantifier::Exists);
                for v in carrier {
                    self.locals.push((p.name.clone(), v));
                    let r = self.eval(body, state).and_then(boolean);
                    self.locals.pop();
                    if r? == want {
                        return Ok(Value::Bool(want));
                    }
                }
                Ok(Value::Bool(!want))
            }
            SpecExpr::Select(a, i) => {
                let items = array(self.eval(a, state)?)?;
                let idx = num(self.eval(i, state)?)?;
                let k = index_of(&idx, items.len())?;
                Ok(items[k].clone())
            }
            SpecExpr::Slice(a, i, j) => {
                let items = array(self.eval(a, state)?)?;
                let lo = num(self.eval(i, state)?)?;
                let hi = num(self.eval(j, state)?)?;
                let len = items.len();
                match (bound_of(&lo, len), bound_of(&hi, len)) {
                    (Some(l), Some(h)) if l <= h => Ok(Value::Array(items[l..h].to_vec())),
                    _ => Err(EvalError::BadSlice { lo: lo.to_string(), hi: hi.to_string(), len }),
                }
            }
            SpecExpr::Store(a, i, v) => {
                let mut items = array(self.eval(a, state)?)?;
                let idx = num(self.eval(i, state)?)?;
                let k = index_of(&idx, items.len())?;
                items[k] = self.eval(v, state)?;
                Ok(Value::Array(items))
            }
            SpecExpr::Len(a) => {
                let items = array(self.eval(a, state)?)?;
                Ok(Value::int(items.len() as i64))
            }
            SpecExpr::App(name, _) => Err(EvalError::UndefinedPredicate(name.clone())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_lang::parse::parse_spec_expr_untyped;
    use crate::spec_lang::types::SpecType;
    use crate::spec_lang::value::parse_rational;

    struct Small;
    impl Carriers for Small {
        fn carrier(&self, _: &str, ty: &SpecType) -> Result<Vec<Value>, String> {
            match ty {
                SpecType::Nat => Ok((0..4).map(Value::int).collect()),
                _ => Err(format!("no carrier for {ty}")),
            }
        }
    }

    fn r(t: &str) -> Value {
        Value::Num(parse_rational(t).unwrap())
    }

    fn ev(text: &str, state: &Valuation) -> Result<Value, EvalError> {
        eval_spec(&parse_spec_expr_untyped(text).unwrap(), state, state, &Small)
    }

    #[test]
    fn zero_squared_below_half() {
        let s = Valuation::new().with("N", r("1/2"));
        assert_eq!(ev("0*0 <= N", &s), Ok(Value::Bool(true)));
    }

    #[test]
    fn init_reads_pre_state() {
        let s = Valuation::new().with("x", r("3"));
        assert_eq!(ev("x = x_0", &s), Ok(Value::Bool(true)));
        let pre = Valuation::new().with("x", r("4"));
        let e = parse_spec_expr_untyped("x < x_0").unwrap();
        assert_eq!(eval_spec(&e, &s, &pre, &Small), Ok(Value::Bool(true)));
    }

    #[test]
    fn witness_region_below_one() {
        let s = Valuation::new().with("N", r("1/2")).with("y", r("3/2"));
        assert_eq!(ev("N < y*y", &s), Ok(Value::Bool(true)));
    }

    #[test]
    fn error_cases() {
        let s = Valuation::new()
            .with("a", Value::Array(vec![Value::int(1), Value::int(2)]))
            .with("x", r("0"));
        assert!(matches!(ev("1/x = 1", &s), Err(EvalError::DivisionByZero(_))));
        assert!(matches!(ev("a[2] = 1", &s), Err(EvalError::IndexOutOfBounds { .. })));
        assert!(matches!(ev("forall (z:float), z = z", &s), Err(EvalError::UnboundedQuantifier(..))));
        assert_eq!(ev("a[0:1] = a[1:1]", &s), Ok(Value::Bool(false)));
        assert_eq!(ev("len(a[1:2]) = 1", &s), Ok(Value::Bool(true)));
        assert_eq!(ev("store(a, 0, 2)[0] = a[1]", &s), Ok(Value::Bool(true)));
    }

    #[test]
    fn short_circuit_guards_out_of_range_reads() {
        let s = Valuation::new().with("a", Value::Array(vec![Value::int(1)]));
        assert_eq!(ev("forall (i:nat), i < len(a) -> a[i] > 0", &s), Ok(Value::Bool(true)));
        assert_eq!(ev("exists (i:nat), i < len(a) /\\ a[i] = 1", &s), Ok(Value::Bool(true)));
    }
}
