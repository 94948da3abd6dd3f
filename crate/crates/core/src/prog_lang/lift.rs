//! Conversions between program expressions and formulas.

use num_traits::Signed;

use crate::spec_lang::{ArithOp, RelOp, SpecExpr};

use super::ast::{CmpOp, ProgExpr};

fn rel_of(op: CmpOp) -> RelOp {
    match op {
        CmpOp::Eq => RelOp::Eq,
        CmpOp::Ne => RelOp::Ne,
        CmpOp::Lt => RelOp::Lt,
        CmpOp::Le => RelOp::Le,
        CmpOp::Gt => RelOp::Gt,
        CmpOp::Ge => RelOp::Ge,
    }
}

fn cmp_of(op: RelOp) -> CmpOp {
    match op {
        RelOp::Eq => CmpOp::Eq,
        RelOp::Ne => CmpOp::Ne,
        RelOp::Lt => CmpOp::Lt,
        RelOp::Le => CmpOp::Le,
        RelOp::Gt => CmpOp::Gt,
        RelOp::Ge => CmpOp::Ge,
    }
}

/// Structural lift of a program expression into a formula or term.
pub fn prog_expr_to_spec(e: &ProgExpr) -> SpecExpr {
    let b = |x: &ProgExpr| Box::new(prog_expr_to_spec(x));
    match e {
        ProgExpr::Num(r) => SpecExpr::Num(r.clone()),
        ProgExpr::Bool(v) => SpecExpr::Bool(*v),
        ProgExpr::Name(n) => SpecExpr::name(n),
        ProgExpr::Cmp(op, x, y) => SpecExpr::Rel(rel_of(*op), b(x), b(y)),
        ProgExpr::And(..) => SpecExpr::And(flatten(e, true)),
        ProgExpr::Or(..) => SpecExpr::Or(flatten(e, false)),
        ProgExpr::Not(x) => SpecExpr::Not(b(x)),
        ProgExpr::Arith(op, x, y) => SpecExpr::Arith(*op, b(x), b(y)),
        ProgExpr::Index(n, i) => SpecExpr::Select(Box::new(SpecExpr::name(n)), b(i)),
        ProgExpr::Slice(n, i, j) => SpecExpr::Slice(Box::new(SpecExpr::name(n)), b(i), b(j)),
    }
}

fn flatten(e: &ProgExpr, and: bool) -> Vec<SpecExpr> {
    match (e, and) {
        (ProgExpr::And(x, y), true) | (ProgExpr::Or(x, y), false) => {
            let mut out = flatten(x, and);
            out.push(prog_expr_to_spec(y));
            out
        }
        _ => vec![prog_expr_to_spec(e)],
    }
}

/// Partial inverse of [`prog_expr_to_spec`]; `None` for constructs with no
/// program counterpart (quantifiers, initial values, stores, predicates).
pub fn spec_to_prog_expr(e: &SpecExpr) -> Option<ProgExpr> {
    let b = |x: &SpecExpr| spec_to_prog_expr(x).map(Box::new);
    Some(match e {
        SpecExpr::Num(r) => ProgExpr::Num(r.clone()),
        SpecExpr::Bool(v) => ProgExpr::Bool(*v),
        SpecExpr::Var(n) | SpecExpr::Const(n) => ProgExpr::Name(n.clone()),
        SpecExpr::Neg(x) => match &**x {
            SpecExpr::Num(r) if r.is_positive() => ProgExpr::Num(-r),
            other => ProgExpr::Arith(ArithOp::Sub, Box::new(ProgExpr::int(0)), b(other)?),
        },
        SpecExpr::Arith(op, x, y) => ProgExpr::Arith(*op, b(x)?, b(y)?),
        SpecExpr::Rel(op, x, y) => ProgExpr::Cmp(cmp_of(*op), b(x)?, b(y)?),
        SpecExpr::Not(x) => ProgExpr::Not(b(x)?),
        SpecExpr::And(items) | SpecExpr::Or(items) => {
            let and = matches!(e, SpecExpr::And(_));
            let mut it = items.iter();
            let Some(first) = it.next() else {
                return Some(ProgExpr::Bool(and));
            };
            let mut acc = spec_to_prog_expr(first)?;
            for item in it {
                let rhs = b(item)?;
                acc = if and {
                    ProgExpr::And(Box::new(acc), rhs)
                } else {
                    ProgExpr::Or(Box::new(acc), rhs)
                };
            }
            acc
        }
        SpecExpr::Implies(x, y) => ProgExpr::Or(Box::new(ProgExpr::Not(b(x)?)), b(y)?),
        SpecExpr::Select(a, i) => match &**a {
            SpecExpr::Var(n) | SpecExpr::Const(n) => ProgExpr::Index(n.clone(), b(i)?),
            _ => return None,
        },
        SpecExpr::Slice(a, i, j) => match &**a {
            SpecExpr::Var(n) | SpecExpr::Const(n) => ProgExpr::Slice(n.clone(), b(i)?, b(j)?),
            _ => return None,
        },
        SpecExpr::Init(_)
        | SpecExpr::Quant(..)
        | SpecExpr::Store(..)
        | SpecExpr::Len(_)
        | SpecExpr::App(..) => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prog_lang::parse_prog_expr;
    use crate::spec_lang::render_spec_expr;

    fn lift(text: &str) -> String {
        render_spec_expr(&prog_expr_to_spec(&parse_prog_expr(text).unwrap()))
    }

    #[test]
    fn guard_keeps_shape() {
        assert_eq!(lift("(x+y)/2*(x+y)/2 > N"), "(x+y)/2*(x+y)/2 > N");
        assert_eq!(lift("True"), "true");
        assert_eq!(lift("a[i] != 0"), "a[i] <> 0");
        assert_eq!(lift("x == 1 and y < 2 and not z"), "x = 1 /\\ y < 2 /\\ ~z");
    }

    #[test]
    fn inverse_on_liftable_terms() {
        for text in ["(x+y)/2*(x+y)/2 > N", "a[i] != 0 or x <= y", "y-x"] {
            let p = parse_prog_expr(text).unwrap();
            assert_eq!(spec_to_prog_expr(&prog_expr_to_spec(&p)), Some(p));
        }
    }
}
