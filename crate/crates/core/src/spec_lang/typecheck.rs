use std::fmt;

use num_traits::Signed;

use super::expr::{ArithOp, RelOp, SpecExpr};
use super::render::render_spec_expr;
use super::types::{SpecType, TypedParam};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeError {
    /// Rendering of the offending sub-expression.
    pub node: String,
    pub message: String,
}

impl fmt::Display for TypeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}", self.node, self.message)
    }
}

struct Checker<'a> {
    env: &'a [TypedParam],
    scope: Vec<TypedParam>,
    errors: Vec<TypeError>,
}

impl Checker<'_> {
    fn fail(&mut self, e: &SpecExpr, message: impl Into<String>) -> Option<SpecType> {
        self.errors.push(TypeError { node: render_spec_expr(e), message: message.into() });
        None
    }

    fn lookup(&self, name: &str) -> Option<SpecType> {
        self.scope
            .iter()
            .rev()
            .chain(self.env.iter())
            .find(|p| p.name == name)
            .map(|p| p.ty.clone())
    }

    fn numeric(&mut self, e: &SpecExpr, inner: &SpecExpr) -> Option<SpecType> {
        let t = self.check(inner)?;
        if t.is_numeric() {
            Some(t)
        } else {
            self.fail(e, format!("expected a numeric operand, found {t}"))
        }
    }

    fn boolean(&mut self, e: &SpecExpr) -> Option<()> {
        let t = self.check(e)?;
        if t == SpecType::Bool {
            Some(())
        } else {
            self.fail(e, format!("expected bool, found {t}"));
            None
        }
    }

    fn index(&mut self, e: &SpecExpr, i: &SpecExpr) -> Option<()> {
        let t = self.check(i)?;
        if t.is_integral() {
            Some(())
        } else {
            self.fail(e, format!("array index must be nat or int, found {t}"));
            None
        }
    }

    fn array(&mut self, e: &SpecExpr, a: &SpecExpr) -> Option<SpecType> {
        match self.check(a)? {
            SpecType::Array(elem) => Some(*elem),
            other => self.fail(e, format!("expected an array, found {other}")),
        }
    }

    fn check(&mut self, e: &SpecExpr) -> Option<SpecType> {
        match e {
            SpecExpr::Num(r) => Some(if !r.is_integer() {
                SpecType::Float
            } else if r.is_negative() {
                SpecType::Int
            } else {
                SpecType::Nat
            }),
            SpecExpr::Bool(_) => Some(SpecType::Bool),
            SpecExpr::Var(n) | SpecExpr::Const(n) => match self.lookup(n) {
                Some(t) => Some(t),
                None => self.fail(e, format!("unbound name `{n}`")),
            },
            SpecExpr::Init(inner) => self.check(inner),
            SpecExpr::Neg(inner) => {
                let t = self.numeric(e, inner)?;
                Some(if t == SpecType::Nat { SpecType::Int } else { t })
            }
            SpecExpr::Arith(op, a, b) => {
                let ta = self.numeric(e, a);
                let tb = self.numeric(e, b);
                let joined = ta?.join(&tb?)?;
                Some(match op {
                    ArithOp::Div => SpecType::Float,
                    ArithOp::Sub if joined == SpecType::Nat => SpecType::Int,
                    _ => joined,
                })
            }
            SpecExpr::Rel(op, a, b) => {
                let ta = self.check(a);
                let tb = self.check(b);
                let (ta, tb) = (ta?, tb?);
                let ok = match op {
                    RelOp::Eq | RelOp::Ne => ta.join(&tb).is_some(),
                    _ => ta.is_numeric() && tb.is_numeric(),
                };
                if ok {
                    Some(SpecType::Bool)
                } else {
                    self.fail(e, format!("cannot compare {ta} with {tb}"))
                }
            }
            SpecExpr::Not(inner) => {
                self.boolean(inner)?;
                Some(SpecType::Bool)
            }
            SpecExpr::And(items) | SpecExpr::Or(items) => {
                let mut ok = true;
                for item in items {
                    ok &= self.boolean(item).is_some();
                }
                ok.then_some(SpecType::Bool)
            }
            SpecExpr::Implies(a, b) => {
                let ok_a = self.boolean(a).is_some();
                let ok_b = self.boolean(b).is_some();
                (ok_a && ok_b).then_some(SpecType::Bool)
            }
            SpecExpr::Quant(_, p, body) => {
                self.scope.push(p.clone());
                let r = self.boolean(body);
                self.scope.pop();
                r.map(|_| SpecType::Bool)
            }
            SpecExpr::Select(a, i) => {
                let elem = self.array(e, a);
                self.index(e, i)?;
                elem
            }
            SpecExpr::Slice(a, i, j) => {
                let elem = self.array(e, a);
                let oi = self.index(e, i);
                let oj = self.index(e, j);
                oi?;
                oj?;
                elem.map(SpecType::array)
            }
            SpecExpr::Store(a, i, v) => {
                let elem = self.array(e, a);
                let oi = self.index(e, i);
                let tv = self.check(v);
                let (elem, tv) = (elem?, tv?);
                oi?;
                if elem.accepts(&tv) {
                    Some(SpecType::array(elem))
                } else {
                    self.fail(e, format!("cannot store {tv} into array {elem}"))
                }
            }
            SpecExpr::Len(a) => {
                self.array(e, a)?;
                Some(SpecType::Nat)
            }
            SpecExpr::App(_, args) => {
                let mut ok = true;
                for a in args {
                    ok &= self.check(a).is_some();
                }
                ok.then_some(SpecType::Bool)
            }
        }
    }
}

/// Type of `e` under `env`, or every per-node mismatch found.
pub fn type_check(e: &SpecExpr, env: &[TypedParam]) -> Result<SpecType, Vec<TypeError>> {
    let mut c = Checker { env, scope: Vec::new(), errors: Vec::new() };
    let t = c.check(e);
    match t {
        Some(t) if c.errors.is_empty() => Ok(t),
        _ => {
            if c.errors.is_empty() {
                c.errors.push(TypeError { node: render_spec_expr(e), message: "ill-typed".into() });
            }
            Err(c.errors)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_lang::parse::parse_spec_expr_untyped;

    fn env() -> Vec<TypedParam> {
        vec![
            TypedParam::new("N", SpecType::Float),
            TypedParam::new("e", SpecType::Float),
            TypedParam::new("a", SpecType::array(SpecType::Int)),
            TypedParam::new("k", SpecType::Nat),
        ]
    }

    fn tc(t: &str) -> Result<SpecType, Vec<TypeError>> {
        type_check(&parse_spec_expr_untyped(t).unwrap(), &env())
    }

    #[test]
    fn sqrt_precondition_is_bool() {
        assert_eq!(tc("N >= 0 /\\ e > 0"), Ok(SpecType::Bool));
    }

    #[test]
    fn second_conjunct_reported() {
        let errs = tc("true /\\ 1").unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].node, "1");
    }

    #[test]
    fn select_plus_one_is_int() {
        assert_eq!(tc("a[0] + 1"), Ok(SpecType::Int));
        assert_eq!(tc("k - 1"), Ok(SpecType::Int));
        assert_eq!(tc("k / 2"), Ok(SpecType::Float));
        assert_eq!(tc("len(a)"), Ok(SpecType::Nat));
        assert_eq!(tc("store(a, 0, 3)"), Ok(SpecType::array(SpecType::Int)));
    }

    #[test]
    fn index_and_operand_errors() {
        assert!(tc("a[N] = 0").is_err());
        assert!(tc("a + 1 = 0").is_err());
        assert!(tc("forall (i:nat), i").is_err());
        assert_eq!(tc("forall (i:nat), a[i] >= 0"), Ok(SpecType::Bool));
    }
}
