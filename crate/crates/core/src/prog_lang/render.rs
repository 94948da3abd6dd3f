use num_traits::Signed;

use crate::spec_lang::{render_rational, ArithOp};

use super::ast::{ProgExpr, Statement, Target};

const OR: u8 = 1;
const AND: u8 = 2;
const NOT: u8 = 3;
const CMP: u8 = 4;
const ADD: u8 = 5;
const MUL: u8 = 6;
const ATOM: u8 = 7;

fn prec(e: &ProgExpr) -> u8 {
    match e {
        ProgExpr::Or(..) => OR,
        ProgExpr::And(..) => AND,
        ProgExpr::Not(_) => NOT,
        ProgExpr::Cmp(..) => CMP,
        ProgExpr::Arith(ArithOp::Add | ArithOp::Sub, ..) => ADD,
        ProgExpr::Arith(..) => MUL,
        // no unary minus in programs; negative literals print as `(0-k)`
        ProgExpr::Num(r) if r.is_negative() => ADD,
        ProgExpr::Num(r) if !r.is_integer() && !render_rational(r).contains('.') => MUL,
        _ => ATOM,
    }
}

pub fn render_prog_expr(e: &ProgExpr) -> String {
    let mut out = String::new();
    write_expr(e, OR, &mut out);
    out
}

fn write_expr(e: &ProgExpr, ctx: u8, out: &mut String) {
    let wrap = prec(e) < ctx;
    if wrap {
        out.push('(');
    }
    match e {
        ProgExpr::Num(r) if r.is_negative() => {
            out.push_str("0-");
            write_expr(&ProgExpr::Num(-r), MUL, out);
        }
        ProgExpr::Num(r) => out.push_str(&render_rational(r)),
        ProgExpr::Bool(b) => out.push_str(if *b { "True" } else { "False" }),
        ProgExpr::Name(n) => out.push_str(n),
        ProgExpr::Index(n, i) => {
            out.push_str(n);
            out.push('[');
            write_expr(i, OR, out);
            out.push(']');
        }
        ProgExpr::Slice(n, i, j) => {
            out.push_str(n);
            out.push('[');
            write_expr(i, OR, out);
            out.push(':');
            write_expr(j, OR, out);
            out.push(']');
        }
        ProgExpr::Not(a) => {
            out.push_str("not ");
            write_expr(a, NOT, out);
        }
        ProgExpr::And(a, b) | ProgExpr::Or(a, b) => {
            let (p, word) = if matches!(e, ProgExpr::And(..)) { (AND, " and ") } else { (OR, " or ") };
            write_expr(a, p, out);
            out.push_str(word);
            write_expr(b, p + 1, out);
        }
        ProgExpr::Cmp(op, a, b) => {
            write_expr(a, ADD, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(b, ADD, out);
        }
        ProgExpr::Arith(op, a, b) => {
            let (l, r) = match op {
                ArithOp::Add | ArithOp::Sub => (ADD, MUL),
                ArithOp::Mul | ArithOp::Div => (MUL, ATOM),
            };
            write_expr(a, l, out);
            out.push_str(op.symbol());
            write_expr(b, r, out);
        }
    }
    if wrap {
        out.push(')');
    }
}

fn render_target(t: &Target) -> String {
    match t {
        Target::Name(n) => n.clone(),
        Target::Index(n, i) => format!("{n}[{}]", render_prog_expr(i)),
    }
}

/// Renders a program with four-space indentation and a trailing newline.
pub fn render_program(s: &Statement) -> String {
    let mut out = String::new();
    write_stmt(s, 0, &mut out);
    out
}

fn line(depth: usize, text: &str, out: &mut String) {
    for _ in 0..depth {
        out.push_str("    ");
    }
    out.push_str(text);
    out.push('\n');
}

fn write_stmt(s: &Statement, depth: usize, out: &mut String) {
    match s {
        Statement::Pass => line(depth, "pass", out),
        Statement::Assign { target, value } => {
            line(depth, &format!("{} = {}", render_target(target), render_prog_expr(value)), out)
        }
        Statement::Seq(items) => {
            if items.is_empty() {
                line(depth, "pass", out);
            }
            for item in items {
                write_stmt(item, depth, out);
            }
        }
        Statement::While { cond, body } => {
            line(depth, &format!("while {}:", render_prog_expr(cond)), out);
            write_stmt(body, depth + 1, out);
        }
        Statement::If { cond, then_branch, else_branch } => {
            line(depth, &format!("if {}:", render_prog_expr(cond)), out);
            write_stmt(then_branch, depth + 1, out);
            if **else_branch != Statement::Pass {
                line(depth, "else:", out);
                write_stmt(else_branch, depth + 1, out);
            }
        }
        Statement::Assert(e) => line(depth, &format!("assert {}", render_prog_expr(e)), out),
        Statement::ProcDef { name, params, body } => {
            let ps: Vec<String> = params.iter().map(|(n, t)| format!("{n}: {t}")).collect();
            line(depth, &format!("def {name}({}):", ps.join(", ")), out);
            write_stmt(body, depth + 1, out);
        }
        Statement::Call { name, args } => {
            let a: Vec<String> = args.iter().map(render_prog_expr).collect();
            line(depth, &format!("{name}({})", a.join(", ")), out);
        }
    }
}
