use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed};

use super::expr::{ArithOp, SpecExpr};
use super::Rational;

// Binding strength, loosest first.
const QUANT: u8 = 0;
const IMPLIES: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const NOT: u8 = 4;
const REL: u8 = 5;
const ADD: u8 = 6;
const MUL: u8 = 7;
const NEG: u8 = 8;
const ATOM: u8 = 10;

fn prec(e: &SpecExpr) -> u8 {
    match e {
        SpecExpr::Quant(..) => QUANT,
        SpecExpr::Implies(..) => IMPLIES,
        SpecExpr::Or(_) => OR,
        SpecExpr::And(_) => AND,
        SpecExpr::Not(_) => NOT,
        SpecExpr::Rel(..) => REL,
        SpecExpr::Arith(ArithOp::Add | ArithOp::Sub, ..) => ADD,
        SpecExpr::Arith(..) => MUL,
        SpecExpr::Neg(_) => NEG,
        SpecExpr::Num(r) if r.is_negative() => NEG,
        _ => ATOM,
    }
}

/// Canonical concrete syntax; re-parses to a structurally identical AST.
pub fn render_spec_expr(e: &SpecExpr) -> String {
    let mut out = String::new();
    write_expr(e, QUANT, &mut out);
    out
}

/// Decimal text for rationals whose denominator has only factors 2 and 5.
pub fn render_rational(r: &Rational) -> String {
    if r.is_integer() {
        return r.to_integer().to_string();
    }
    let mut d = r.denom().clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while d.is_multiple_of(&two) {
        d /= &two;
        twos += 1;
    }
    while d.is_multiple_of(&five) {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return format!("{}/{}", r.numer(), r.denom());
    }
    let digits = twos.max(fives);
    let scaled = (r.abs() * Rational::from_integer(num_traits::pow(BigInt::from(10), digits)))
        .to_integer()
        .to_string();
    let padded = format!("{scaled:0>width$}", width = digits + 1);
    let (whole, frac) = padded.split_at(padded.len() - digits);
    let sign = if r.is_negative() { "-" } else { "" };
    format!("{sign}{whole}.{frac}")
}

fn write_expr(e: &SpecExpr, ctx: u8, out: &mut String) {
    let wrap = prec(e) < ctx;
    if wrap {
        out.push('(');
    }
    match e {
        SpecExpr::Num(r) => {
            let text = render_rational(r);
            if r.is_integer() || text.contains('.') {
                out.push_str(&text);
            } else {
                out.push('(');
                out.push_str(&text);
                out.push(')');
            }
        }
        SpecExpr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        SpecExpr::Var(n) | SpecExpr::Const(n) => out.push_str(n),
        SpecExpr::Init(inner) => match &**inner {
            SpecExpr::Var(n) | SpecExpr::Const(n) => {
                out.push_str(n);
                out.push_str("_0");
            }
            other => {
                out.push('(');
                write_expr(other, QUANT, out);
                out.push_str(")_0");
            }
        },
        SpecExpr::Neg(inner) => {
            out.push('-');
            // `--x` lexes fine but reads badly
            let ctx = if matches!(&**inner, SpecExpr::Neg(_)) { ATOM } else { NEG };
            write_expr(inner, ctx, out);
        }
        SpecExpr::Arith(op, a, b) => {
            let (lctx, rctx) = match op {
                ArithOp::Add | ArithOp::Sub => (ADD, MUL),
                ArithOp::Mul | ArithOp::Div => (MUL, NEG),
            };
            write_expr(a, lctx, out);
            out.push_str(op.symbol());
            let rctx = if matches!(&**b, SpecExpr::Neg(_)) { ATOM } else { rctx };
            write_expr(b, rctx, out);
        }
        SpecExpr::Rel(op, a, b) => {
            write_expr(a, ADD, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(b, ADD, out);
        }
        SpecExpr::Not(inner) => {
            out.push('~');
            write_expr(inner, NOT, out);
        }
        SpecExpr::And(items) => write_list(items, " /\\ ", "true", NOT, out),
        SpecExpr::Or(items) => write_list(items, " \\/ ", "false", AND, out),
        SpecExpr::Implies(a, b) => {
            write_expr(a, OR, out);
            out.push_str(" -> ");
            write_expr(b, IMPLIES, out);
        }
        SpecExpr::Quant(q, p, body) => {
            out.push_str(q.keyword());
            out.push(' ');
            out.push_str(&p.to_string());
            out.push_str(", ");
            write_expr(body, QUANT, out);
        }
        SpecExpr::Select(a, i) => {
            write_expr(a, ATOM, out);
            out.push('[');
            write_expr(i, QUANT, out);
            out.push(']');
        }
        SpecExpr::Slice(a, i, j) => {
            write_expr(a, ATOM, out);
            out.push('[');
            write_expr(i, QUANT, out);
            out.push(':');
            write_expr(j, QUANT, out);
            out.push(']');
        }
        SpecExpr::Store(a, i, v) => write_call("store", [&**a, &**i, &**v], out),
        SpecExpr::Len(a) => write_call("len", [&**a], out),
        SpecExpr::App(name, args) => write_call(name, args.iter(), out),
    }
    if wrap {
        out.push(')');
    }
}

fn write_list(items: &[SpecExpr], sep: &str, empty: &str, ctx: u8, out: &mut String) {
    if items.is_empty() {
        out.push_str(empty);
        return;
    }
    for (k, item) in items.iter().enumerate() {
        if k > 0 {
            out.push_str(sep);
        }
        write_expr(item, ctx, out);
    }
}

fn write_call<'a>(name: &str, args: impl IntoIterator<Item = &'a SpecExpr>, out: &mut String) {
    out.push_str(name);
    out.push('(');
    for (k, a) in args.into_iter().enumerate() {
        if k > 0 {
            out.push_str(", ");
        }
        write_expr(a, QUANT, out);
    }
    out.push(')');
}

impl std::fmt::Display for SpecExpr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&render_spec_expr(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_lang::expr::RelOp;
    use crate::spec_lang::value::parse_rational;

    #[test]
    fn canonical_conjunction() {
        let x = SpecExpr::name("x");
        let y = SpecExpr::name("y");
        let n = SpecExpr::name("N");
        let e = SpecExpr::And(vec![
            SpecExpr::rel(RelOp::Le, SpecExpr::arith(ArithOp::Mul, x.clone(), x), n.clone()),
            SpecExpr::rel(RelOp::Lt, n, SpecExpr::arith(ArithOp::Mul, y.clone(), y)),
        ]);
        assert_eq!(render_spec_expr(&e), "x*x <= N /\\ N < y*y");
    }

    #[test]
    fn init_marker_text() {
        assert_eq!(render_spec_expr(&SpecExpr::init_of("x")), "x_0");
    }

    #[test]
    fn nested_grouping_is_kept() {
        let p = SpecExpr::name("p");
        let q = SpecExpr::name("q");
        let r = SpecExpr::name("r");
        let e = SpecExpr::And(vec![SpecExpr::And(vec![p.clone(), q.clone()]), r.clone()]);
        assert_eq!(render_spec_expr(&e), "(p /\\ q) /\\ r");
        let e = SpecExpr::arith(ArithOp::Sub, p.clone(), SpecExpr::arith(ArithOp::Sub, q, r));
        assert_eq!(render_spec_expr(&e), "p-(q-r)");
    }

    #[test]
    fn decimals() {
        assert_eq!(render_rational(&parse_rational("1/2").unwrap()), "0.5");
        assert_eq!(render_rational(&parse_rational("-1/8").unwrap()), "-0.125");
        assert_eq!(render_rational(&parse_rational("5/4").unwrap()), "1.25");
        assert_eq!(render_rational(&parse_rational("1/3").unwrap()), "1/3");
    }
}
