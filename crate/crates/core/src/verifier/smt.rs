//! SMT-LIB emission and solver subprocess handling.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::Duration;

use num_traits::Signed;
use wait_timeout::ChildExt;

use crate::spec_lang::{ArithOp, Quantifier, Rational, RelOp, SpecExpr, SpecType};

use super::prepare::Prepared;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sort {
    Bool,
    Int,
    Real,
    Array(Box<Sort>),
}

impl Sort {
    fn of(ty: &SpecType) -> Result<Sort, String> {
        Ok(match ty {
            SpecType::Bool => Sort::Bool,
            SpecType::Nat | SpecType::Int => Sort::Int,
            SpecType::Float => Sort::Real,
            SpecType::Array(e) => match &**e {
                SpecType::Array(_) => return Err("nested arrays are not supported".into()),
                inner => Sort::Array(Box::new(Sort::of(inner)?)),
            },
        })
    }

    fn smt(&self) -> String {
        match self {
            Sort::Bool => "Bool".into(),
            Sort::Int => "Int".into(),
            Sort::Real => "Real".into(),
            Sort::Array(e) => format!("(Array Int {})", e.smt()),
        }
    }
}

/// Solver symbol of a specification name.
pub fn symbol(name: &str) -> String {
    format!("u.{name}")
}

/// Solver symbol holding the length of array `name`.
pub fn len_symbol(name: &str) -> String {
    format!("len.{name}")
}

fn numeral(r: &Rational) -> (String, Sort) {
    let abs = r.abs();
    let (text, sort) = if abs.is_integer() {
        (abs.to_integer().to_string(), Sort::Int)
    } else {
        (format!("(/ {}.0 {}.0)", abs.numer(), abs.denom()), Sort::Real)
    };
    if r.is_negative() {
        (format!("(- {text})"), sort)
    } else {
        (text, sort)
    }
}

fn to_real((t, s): (String, Sort)) -> String {
    if s == Sort::Int {
        format!("(to_real {t})")
    } else {
        t
    }
}

struct ArrTerm {
    base: String,
    len: String,
    offset: Option<String>,
    elem: Sort,
}

impl ArrTerm {
    fn at(&self, index: &str) -> String {
        match &self.offset {
            Some(o) => format!("(select {} (+ {o} {index}))", self.base),
            None => format!("(select {} {index})", self.base),
        }
    }
}

struct Translator<'a> {
    env: &'a [crate::spec_lang::TypedParam],
    bound: Vec<(String, SpecType)>,
    apps: BTreeMap<String, Vec<Sort>>,
    fresh: usize,
}

impl Translator<'_> {
    fn type_of(&self, name: &str) -> Result<SpecType, String> {
        if let Some((_, t)) = self.bound.iter().rev().find(|(n, _)| n == name) {
            return Ok(t.clone());
        }
        self.env.iter().find(|p| p.name == name).map(|p| p.ty.clone()).ok_or_else(|| format!("no type for `{name}`"))
    }

    fn numeric(&mut self, e: &SpecExpr) -> Result<(String, Sort), String> {
        let t = self.term(e)?;
        match t.1 {
            Sort::Int | Sort::Real => Ok(t),
            _ => Err("expected a number".into()),
        }
    }

    fn formula(&mut self, e: &SpecExpr) -> Result<String, String> {
        let (t, s) = self.term(e)?;
        if s == Sort::Bool {
            Ok(t)
        } else {
            Err("expected a formula".into())
        }
    }

    fn index(&mut self, e: &SpecExpr) -> Result<String, String> {
        match self.term(e)? {
            (t, Sort::Int) => Ok(t),
            _ => Err("array index must be integral".into()),
        }
    }

    fn array(&mut self, e: &SpecExpr) -> Result<ArrTerm, String> {
        match e {
            SpecExpr::Var(n) | SpecExpr::Const(n) => match Sort::of(&self.type_of(n)?)? {
                Sort::Array(elem) => Ok(ArrTerm { base: symbol(n), len: len_symbol(n), offset: None, elem: *elem }),
                _ => Err(format!("`{n}` is not an array")),
            },
            SpecExpr::Store(a, i, v) => {
                let a = self.array(a)?;
                if a.offset.is_some() {
                    return Err("store into a slice is not supported".into());
                }
                let i = self.index(i)?;
                let v = self.term(v)?;
                let v = if a.elem == Sort::Real { to_real(v) } else { v.0 };
                Ok(ArrTerm { base: format!("(store {} {i} {v})", a.base), len: a.len, offset: None, elem: a.elem })
            }
            SpecExpr::Slice(a, i, j) => {
                let a = self.array(a)?;
                let i = self.index(i)?;
                let j = self.index(j)?;
                let offset = match &a.offset {
                    Some(o) => format!("(+ {o} {i})"),
                    None => i.clone(),
                };
                Ok(ArrTerm { base: a.base, len: format!("(- {j} {i})"), offset: Some(offset), elem: a.elem })
            }
            _ => Err("unsupported array expression".into()),
        }
    }

    fn fresh(&mut self) -> String {
        self.fresh += 1;
        format!("q!{}", self.fresh)
    }

    fn array_eq(&mut self, a: &SpecExpr, b: &SpecExpr) -> Result<String, String> {
        let (a, b) = (self.array(a)?, self.array(b)?);
        let k = self.fresh();
        Ok(format!(
            "(and (= {la} {lb}) (forall (({k} Int)) (=> (and (<= 0 {k}) (< {k} {la})) (= {x} {y}))))",
            la = a.len,
            lb = b.len,
            x = a.at(&k),
            y = b.at(&k)
        ))
    }

    fn term(&mut self, e: &SpecExpr) -> Result<(String, Sort), String> {
        Ok(match e {
            SpecExpr::Num(r) => numeral(r),
            SpecExpr::Bool(b) => (b.to_string(), Sort::Bool),
            SpecExpr::Var(n) | SpecExpr::Const(n) => {
                let sort = Sort::of(&self.type_of(n)?)?;
                if matches!(sort, Sort::Array(_)) {
                    return Err(format!("array `{n}` used as a value"));
                }
                (symbol(n), sort)
            }
            SpecExpr::Init(_) => return Err("snapshot markers must be removed first".into()),
            SpecExpr::Neg(a) => {
                let (t, s) = self.numeric(a)?;
                (format!("(- {t})"), s)
            }
            SpecExpr::Arith(op, a, b) => {
                let x = self.numeric(a)?;
                let y = self.numeric(b)?;
                let sym = match op {
                    ArithOp::Add => "+",
                    ArithOp::Sub => "-",
                    ArithOp::Mul => "*",
                    ArithOp::Div => "/",
                };
                if *op != ArithOp::Div && x.1 == Sort::Int && y.1 == Sort::Int {
                    (format!("({sym} {} {})", x.0, y.0), Sort::Int)
                } else {
                    (format!("({sym} {} {})", to_real(x), to_real(y)), Sort::Real)
                }
            }
            SpecExpr::Rel(op, a, b) => {
                let arrays = |e: &SpecExpr, me: &Self| match e {
                    SpecExpr::Var(n) | SpecExpr::Const(n) => matches!(me.type_of(n), Ok(SpecType::Array(_))),
                    SpecExpr::Store(..) | SpecExpr::Slice(..) => true,
                    _ => false,
                };
                if arrays(a, self) || arrays(b, self) {
                    let eq = self.array_eq(a, b)?;
                    return match op {
                        RelOp::Eq => Ok((eq, Sort::Bool)),
                        RelOp::Ne => Ok((format!("(not {eq})"), Sort::Bool)),
                        _ => Err("arrays are not ordered".into()),
                    };
                }
                let x = self.term(a)?;
                let y = self.term(b)?;
                let (x, y) = match (&x.1, &y.1) {
                    (Sort::Bool, Sort::Bool) | (Sort::Int, Sort::Int) => (x.0, y.0),
                    (Sort::Bool, _) | (_, Sort::Bool) => return Err("cannot compare a formula with a number".into()),
                    _ => (to_real(x), to_real(y)),
                };
                let text = match op {
                    RelOp::Eq => format!("(= {x} {y})"),
                    RelOp::Ne => format!("(not (= {x} {y}))"),
                    RelOp::Lt => format!("(< {x} {y})"),
                    RelOp::Le => format!("(<= {x} {y})"),
                    RelOp::Gt => format!("(> {x} {y})"),
                    RelOp::Ge => format!("(>= {x} {y})"),
                };
                (text, Sort::Bool)
            }
            SpecExpr::Not(a) => (format!("(not {})", self.formula(a)?), Sort::Bool),
            SpecExpr::And(items) | SpecExpr::Or(items) => {
                let (op, unit) = if matches!(e, SpecExpr::And(_)) { ("and", "true") } else { ("or", "false") };
                let parts = items.iter().map(|i| self.formula(i)).collect::<Result<Vec<_>, _>>()?;
                match parts.len() {
                    0 => (unit.into(), Sort::Bool),
                    1 => (parts[0].clone(), Sort::Bool),
                    _ => (format!("({op} {})", parts.join(" ")), Sort::Bool),
                }
            }
            SpecExpr::Implies(a, b) => (format!("(=> {} {})", self.formula(a)?, self.formula(b)?), Sort::Bool),
            SpecExpr::Quant(q, p, body) => {
                let sort = Sort::of(&p.ty)?;
                if matches!(sort, Sort::Array(_)) {
                    return Err("quantification over arrays is not supported".into());
                }
                self.bound.push((p.name.clone(), p.ty.clone()));
                let inner = self.formula(body);
                self.bound.pop();
                let inner = inner?;
                let v = symbol(&p.name);
                let text = match (q, &p.ty) {
                    (Quantifier::Forall, SpecType::Nat) => format!("(forall (({v} Int)) (=> (>= {v} 0) {inner}))"),
                    (Quantifier::Exists, SpecType::Nat) => format!("(exists (({v} Int)) (and (>= {v} 0) {inner}))"),
                    (Quantifier::Forall, _) => format!("(forall (({v} {})) {inner})", sort.smt()),
                    (Quantifier::Exists, _) => format!("(exists (({v} {})) {inner})", sort.smt()),
                };
                (text, Sort::Bool)
            }
            SpecExpr::Select(a, i) => {
                let arr = self.array(a)?;
                let i = self.index(i)?;
                (arr.at(&i), arr.elem)
            }
            SpecExpr::Len(a) => (self.array(a)?.len, Sort::Int),
            SpecExpr::Slice(..) | SpecExpr::Store(..) => return Err("array value outside select, len or =".into()),
            SpecExpr::App(name, args) => {
                let parts = args.iter().map(|a| self.term(a)).collect::<Result<Vec<_>, _>>()?;
                if parts.iter().any(|(_, s)| matches!(s, Sort::Array(_))) {
                    return Err("array arguments to predicates are not supported".into());
                }
                let sorts: Vec<Sort> = parts.iter().map(|(_, s)| s.clone()).collect();
                if let Some(prev) = self.apps.insert(name.clone(), sorts.clone()) {
                    if prev != sorts {
                        return Err(format!("predicate `{name}` used at different sorts"));
                    }
                }
                let args: Vec<String> = parts.into_iter().map(|(t, _)| t).collect();
                if args.is_empty() {
                    (format!("p.{name}"), Sort::Bool)
                } else {
                    (format!("(p.{name} {})", args.join(" ")), Sort::Bool)
                }
            }
        })
    }
}

/// A script asserting the premises and the negated conclusion; `sat` means refuted.
pub fn emit_smtlib(p: &Prepared) -> Result<String, String> {
    let mut tr = Translator { env: &p.env, bound: Vec::new(), apps: BTreeMap::new(), fresh: 0 };
    let premises = p.premises().iter().map(|q| tr.formula(q)).collect::<Result<Vec<_>, _>>()?;
    let goal = tr.formula(&p.conclusion)?;
    let mut out = String::from("(set-option :produce-models true)\n");
    for name in p.names() {
        let ty = tr.type_of(&name)?;
        let sort = Sort::of(&ty)?;
        out += &format!("(declare-const {} {})\n", symbol(&name), sort.smt());
        match &ty {
            SpecType::Nat => out += &format!("(assert (>= {} 0))\n", symbol(&name)),
            SpecType::Array(elem) => {
                out += &format!("(declare-const {} Int)\n(assert (>= {} 0))\n", len_symbol(&name), len_symbol(&name));
                if **elem == SpecType::Nat {
                    out += &format!(
                        "(assert (forall ((k Int)) (=> (and (<= 0 k) (< k {})) (>= (select {} k) 0))))\n",
                        len_symbol(&name),
                        symbol(&name)
                    );
                }
            }
            _ => {}
        }
    }
    for (name, sorts) in &tr.apps {
        let args: Vec<String> = sorts.iter().map(Sort::smt).collect();
        out += &format!("(declare-fun p.{name} ({}) Bool)\n", args.join(" "));
    }
    for q in premises {
        out += &format!("(assert {q})\n");
    }
    out += &format!("(assert (not {goal}))\n(check-sat)\n(get-model)\n");
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SolverError {
    #[error("cannot start solver `{0}`: {1}")]
    Spawn(String, String),
    #[error("solver timed out after {0:?}")]
    Timeout(Duration),
    #[error("solver i/o: {0}")]
    Io(String),
}

/// Runs `cmd` (program plus flags) on `script` written to a temporary file.
pub fn run_solver(cmd: &str, script: &str, timeout: Duration) -> Result<String, SolverError> {
    let mut parts = cmd.split_whitespace();
    let program = parts.next().ok_or_else(|| SolverError::Spawn(cmd.into(), "empty command".into()))?;
    let mut file = tempfile::Builder::new()
        .suffix(".smt2")
        .tempfile()
        .map_err(|e| SolverError::Io(e.to_string()))?;
    file.write_all(script.as_bytes()).map_err(|e| SolverError::Io(e.to_string()))?;
    file.flush().map_err(|e| SolverError::Io(e.to_string()))?;
    let mut child = Command::new(program)
        .args(parts)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| SolverError::Spawn(cmd.into(), e.to_string()))?;
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = std::thread::spawn(move || {
        let mut s = String::new();
        stdout.read_to_string(&mut s).map(|_| s)
    });
    match child.wait_timeout(timeout).map_err(|e| SolverError::Io(e.to_string()))? {
        Some(_) => {}
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(SolverError::Timeout(timeout));
        }
    }
    reader.join().map_err(|_| SolverError::Io("reader panicked".into()))?.map_err(|e| SolverError::Io(e.to_string()))
}

/// First-line verdict of a solver reply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat(String),
    Unsat,
    Unknown(String),
}

pub fn parse_answer(output: &str) -> SolverAnswer {
    let mut lines = output.lines();
    match lines.next().map(str::trim) {
        Some("sat") => SolverAnswer::Sat(lines.collect::<Vec<_>>().join("\n")),
        Some("unsat") => SolverAnswer::Unsat,
        Some("unknown") => SolverAnswer::Unknown("solver answered unknown".into()),
        Some(other) => SolverAnswer::Unknown(format!("unexpected solver output: {other}")),
        None => SolverAnswer::Unknown("empty solver output".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_lang::{parse_params, parse_spec_expr};

    #[test]
    fn emits_declarations_and_goal() {
        let env = parse_params("(N:float) (a:array nat) (i:nat)").unwrap();
        let h = parse_spec_expr("N >= 0 /\\ i < len(a)", &env).unwrap();
        let c = parse_spec_expr("a[i] >= 0 /\\ N*N >= N/2", &env).unwrap();
        let s = emit_smtlib(&Prepared::from_parts(&h, &c, &env)).unwrap();
        assert!(s.contains("(declare-const u.N Real)"));
        assert!(s.contains("(declare-const u.a (Array Int Int))"));
        assert!(s.contains("(declare-const len.a Int)"));
        assert!(s.contains("(assert (>= u.i 0))"));
        assert!(s.contains("(assert (not (and (>= (select u.a u.i) 0) (>= (* u.N u.N) (/ u.N (to_real 2))))))"), "{s}");
        assert!(s.ends_with("(check-sat)\n(get-model)\n"));
        assert_eq!(numeral(&crate::spec_lang::parse_rational("-3/4").unwrap()).0, "(- (/ 3.0 4.0))");
    }

    #[test]
    fn answers() {
        assert_eq!(parse_answer("unsat\n(error \"no model\")"), SolverAnswer::Unsat);
        assert!(matches!(parse_answer("sat\n(model)"), SolverAnswer::Sat(_)));
        assert!(matches!(parse_answer(""), SolverAnswer::Unknown(_)));
    }
}
