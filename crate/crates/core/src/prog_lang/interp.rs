//! Reference interpreter.

use std::collections::BTreeMap;

use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

use crate::spec_lang::{ArithOp, Rational, SpecType, Valuation, Value};

use super::ast::{CmpOp, ProgExpr, Statement, Target};
use super::render::render_prog_expr;

pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

/// Numeric semantics for a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumMode {
    #[default]
    Rational,
    /// Every arithmetic result is rounded to the nearest IEEE double.
    Binary64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    AssertFailed { location: String, state: Valuation },
    StepLimit,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutcome {
    pub state: Valuation,
    pub asserts_executed: u64,
    pub steps: u64,
    pub status: RunStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunError {
    #[error("division by zero in `{0}`")]
    DivisionByZero(String),
    #[error("index {index} out of bounds for `{array}` of length {len}")]
    IndexOutOfBounds { array: String, index: String, len: usize },
    #[error("invalid slice of `{0}`")]
    BadSlice(String),
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("call to undefined procedure `{0}`")]
    UndefinedProcedure(String),
    #[error("procedure `{name}` expects {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("recursive call to `{0}`")]
    Recursion(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("binary64 overflow in `{0}`")]
    Overflow(String),
}

#[derive(Clone)]
struct Proc {
    params: Vec<(String, SpecType)>,
    body: Statement,
}

struct Machine {
    mode: NumMode,
    step_limit: u64,
    steps: u64,
    asserts: u64,
    globals: Valuation,
    frames: Vec<BTreeMap<String, Value>>,
    procs: BTreeMap<String, Proc>,
    active: Vec<String>,
}

enum Halt {
    Assert(String),
    Limit,
    Error(RunError),
}

impl From<RunError> for Halt {
    fn from(e: RunError) -> Self {
        Halt::Error(e)
    }
}

fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Nearest double, as an exact rational.
pub fn round_binary64(r: &Rational) -> Option<Rational> {
    Rational::from_f64(to_f64(r))
}

impl Machine {
    fn tick(&mut self) -> Result<(), Halt> {
        self.steps += 1;
        if self.steps > self.step_limit {
            Err(Halt::Limit)
        } else {
            Ok(())
        }
    }

    fn read(&self, name: &str) -> Result<&Value, RunError> {
        if let Some(frame) = self.frames.last() {
            if let Some(v) = frame.get(name) {
                return Ok(v);
            }
        }
        self.globals.get(name).ok_or_else(|| RunError::Unbound(name.to_string()))
    }

    fn write(&mut self, name: &str, v: Value) {
        if let Some(frame) = self.frames.last_mut() {
            if let Some(slot) = frame.get_mut(name) {
                *slot = v;
                return;
            }
        }
        self.globals.set(name, v);
    }

    fn num(&self, v: Value, ctx: &ProgExpr) -> Result<Rational, RunError> {
        match v {
            Value::Num(r) => Ok(r),
            other => Err(RunError::TypeMismatch(format!(
                "expected a number in `{}`, got {other}",
                render_prog_expr(ctx)
            ))),
        }
    }

    fn boolean(&self, v: Value, ctx: &ProgExpr) -> Result<bool, RunError> {
        match v {
            Value::Bool(b) => Ok(b),
            other => Err(RunError::TypeMismatch(format!(
                "expected a boolean in `{}`, got {other}",
                render_prog_expr(ctx)
            ))),
        }
    }

    fn items(&self, name: &str) -> Result<Vec<Value>, RunError> {
        match self.read(name)? {
            Value::Array(items) => Ok(items.clone()),
            other => Err(RunError::TypeMismatch(format!("`{name}` is {other}, not an array"))),
        }
    }

    fn index(&self, name: &str, r: &Rational, len: usize, inclusive: bool) -> Result<usize, RunError> {
        let oob = || RunError::IndexOutOfBounds { array: name.to_string(), index: r.to_string(), len };
        if !r.is_integer() || r.is_negative() {
            return Err(oob());
        }
        let i = r.to_integer().to_usize().ok_or_else(oob)?;
        if i < len || (inclusive && i == len) {
            Ok(i)
        } else {
            Err(oob())
        }
    }

    fn arith(&self, op: ArithOp, a: Rational, b: Rational, ctx: &ProgExpr) -> Result<Rational, RunError> {
        if op == ArithOp::Div && b.is_zero() {
            return Err(RunError::DivisionByZero(render_prog_expr(ctx)));
        }
        match self.mode {
            NumMode::Rational => Ok(match op {
                ArithOp::Add => a + b,
                ArithOp::Sub => a - b,
                ArithOp::Mul => a * b,
                ArithOp::Div => a / b,
            }),
            NumMode::Binary64 => {
                let (x, y) = (to_f64(&a), to_f64(&b));
                let z = match op {
                    ArithOp::Add => x + y,
                    ArithOp::Sub => x - y,
                    ArithOp::Mul => x * y,
                    ArithOp::Div => x / y,
                };
                Rational::from_f64(z).ok_or_else(|| RunError::Overflow(render_prog_expr(ctx)))
            }
        }
    }

    fn eval(&self, e: &ProgExpr) -> Result<Value, RunError> {
        match e {
            ProgExpr::Num(r) => Ok(Value::Num(r.clone())),
            ProgExpr::Bool(b) => Ok(Value::Bool(*b)),
            ProgExpr::Name(n) => self.read(n).cloned(),
            ProgExpr::Index(n, i) => {
                let items = self.items(n)?;
                let r = self.num(self.eval(i)?, e)?;
                let k = self.index(n, &r, items.len(), false)?;
                Ok(items[k].clone())
            }
            ProgExpr::Slice(n, i, j) => {
                let items = self.items(n)?;
                let lo = self.num(self.eval(i)?, e)?;
                let hi = self.num(self.eval(j)?, e)?;
                let bad = |_| RunError::BadSlice(render_prog_expr(e));
                let l = self.index(n, &lo, items.len(), true).map_err(bad)?;
                let h = self.index(n, &hi, items.len(), true).map_err(bad)?;
                if l > h {
                    return Err(RunError::BadSlice(render_prog_expr(e)));
                }
                Ok(Value::Array(items[l..h].to_vec()))
            }
            ProgExpr::Not(a) => Ok(Value::Bool(!self.boolean(self.eval(a)?, e)?)),
            ProgExpr::And(a, b) => {
                if !self.boolean(self.eval(a)?, e)? {
                    return Ok(Value::Bool(false));
                }
                Ok(Value::Bool(self.boolean(self.eval(b)?, e)?))
            }
            ProgExpr::Or(a, b) => {
                if self.boolean(self.eval(a)?, e)? {
                    return Ok(Value::Bool(true));
                }
                Ok(Value::Bool(self.boolean(self.eval(b)?, e)?))
            }
            ProgExpr::Cmp(op, a, b) => {
                let (x, y) = (self.eval(a)?, self.eval(b)?);
                let r = match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    _ => {
                        let (x, y) = (self.num(x, e)?, self.num(y, e)?);
                        match op {
                            CmpOp::Lt => x < y,
                            CmpOp::Le => x <= y,
                            CmpOp::Gt => x > y,
                            CmpOp::Ge => x >= y,
                            CmpOp::Eq | CmpOp::Ne => unreachable!(),
                        }
                    }
                };
                Ok(Value::Bool(r))
            }
            ProgExpr::Arith(op, a, b) => {
                let x = self.num(self.eval(a)?, e)?;
                let y = self.num(self.eval(b)?, e)?;
                Ok(Value::Num(self.arith(*op, x, y, e)?))
            }
        }
    }

    fn exec(&mut self, s: &Statement) -> Result<(), Halt> {
        match s {
            Statement::Pass => self.tick(),
            Statement::Assign { target, value } => {
                self.tick()?;
                let v = self.eval(value)?;
                match target {
                    Target::Name(n) => self.write(n, v),
                    Target::Index(n, i) => {
                        let mut items = self.items(n)?;
                        let r = self.num(self.eval(i)?, i)?;
                        let k = self.index(n, &r, items.len(), false)?;
                        items[k] = v;
                        self.write(n, Value::Array(items));
                    }
                }
                Ok(())
            }
            Statement::Seq(items) => {
                for item in items {
                    self.exec(item)?;
                }
                Ok(())
            }
            Statement::While { cond, body } => loop {
                self.tick()?;
                if !self.boolean(self.eval(cond)?, cond)? {
                    return Ok(());
                }
                self.exec(body)?;
            },
            Statement::If { cond, then_branch, else_branch } => {
                self.tick()?;
                if self.boolean(self.eval(cond)?, cond)? {
                    self.exec(then_branch)
                } else {
                    self.exec(else_branch)
                }
            }
            Statement::Assert(e) => {
                self.tick()?;
                self.asserts += 1;
                if self.boolean(self.eval(e)?, e)? {
                    Ok(())
                } else {
                    Err(Halt::Assert(format!("assert {}", render_prog_expr(e))))
                }
            }
            Statement::ProcDef { name, params, body } => {
                self.procs
                    .insert(name.clone(), Proc { params: params.clone(), body: (**body).clone() });
                Ok(())
            }
            Statement::Call { name, args } => {
                self.tick()?;
                let proc = self
                    .procs
                    .get(name)
                    .cloned()
                    .ok_or_else(|| RunError::UndefinedProcedure(name.clone()))?;
                if proc.params.len() != args.len() {
                    return Err(RunError::Arity {
                        name: name.clone(),
                        expected: proc.params.len(),
                        got: args.len(),
                    }
                    .into());
                }
                if self.active.contains(name) {
                    return Err(RunError::Recursion(name.clone()).into());
                }
                let mut frame = BTreeMap::new();
                for ((p, _), a) in proc.params.iter().zip(args) {
                    frame.insert(p.clone(), self.eval(a)?);
                }
                self.frames.push(frame);
                self.active.push(name.clone());
                let r = self.exec(&proc.body);
                self.active.pop();
                self.frames.pop();
                r
            }
        }
    }
}

/// Runs `p` on `input` and reports the final state and how execution ended.
pub fn interpret(
    p: &Statement,
    input: &Valuation,
    step_limit: u64,
    mode: NumMode,
) -> Result<RunOutcome, RunError> {
    let mut globals = input.clone();
    if mode == NumMode::Binary64 {
        for v in globals.0.values_mut() {
            round_value(v)?;
        }
    }
    let mut m = Machine {
        mode,
        step_limit,
        steps: 0,
        asserts: 0,
        globals,
        frames: Vec::new(),
        procs: BTreeMap::new(),
        active: Vec::new(),
    };
    let status = match m.exec(p) {
        Ok(()) => RunStatus::Completed,
        Err(Halt::Limit) => RunStatus::StepLimit,
        Err(Halt::Assert(location)) => {
            RunStatus::AssertFailed { location, state: m.globals.clone() }
        }
        Err(Halt::Error(e)) => return Err(e),
    };
    let steps = m.steps.min(step_limit);
    Ok(RunOutcome { state: m.globals, asserts_executed: m.asserts, steps, status })
}

fn round_value(v: &mut Value) -> Result<(), RunError> {
    match v {
        Value::Num(r) => {
            *r = round_binary64(r).ok_or_else(|| RunError::Overflow(r.to_string()))?;
        }
        Value::Array(items) => {
            for item in items {
                round_value(item)?;
            }
        }
        Value::Bool(_) => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prog_lang::parse_program;

    fn run(src: &str, input: &str, mode: NumMode) -> RunOutcome {
        let p = parse_program(src).unwrap();
        interpret(&p, &Valuation::parse_bindings(input).unwrap(), DEFAULT_STEP_LIMIT, mode).unwrap()
    }

    #[test]
    fn pass_keeps_state() {
        let out = run("pass", "x = 3", NumMode::Rational);
        assert_eq!(out.state, Valuation::parse_bindings("x = 3").unwrap());
        assert_eq!(out.status, RunStatus::Completed);
    }

    #[test]
    fn element_update_and_slice() {
        let out = run("a[1] = 7\nb = a[0:2]", "a = [1, 2, 3]", NumMode::Rational);
        assert_eq!(out.state.get("a").unwrap().to_string(), "[1, 7, 3]");
        assert_eq!(out.state.get("b").unwrap().to_string(), "[1, 7]");
    }

    #[test]
    fn runtime_errors() {
        let p = parse_program("x = a[3]").unwrap();
        let input = Valuation::parse_bindings("a = [1]").unwrap();
        assert!(matches!(
            interpret(&p, &input, 10, NumMode::Rational),
            Err(RunError::IndexOutOfBounds { .. })
        ));
        let p = parse_program("x = 1/y").unwrap();
        let input = Valuation::parse_bindings("y = 0").unwrap();
        assert!(matches!(interpret(&p, &input, 10, NumMode::Rational), Err(RunError::DivisionByZero(_))));
        let p = parse_program("f(1)").unwrap();
        assert!(matches!(
            interpret(&p, &Valuation::new(), 10, NumMode::Rational),
            Err(RunError::UndefinedProcedure(_))
        ));
    }

    #[test]
    fn step_limit() {
        let out = run("while True:\n    pass", "", NumMode::Rational);
        assert_eq!(out.status, RunStatus::StepLimit);
    }

    #[test]
    fn procedures_are_call_by_value() {
        let src = "def f(k: int):\n    k = k + 1\n    r = k\nf(x)\n";
        let out = run(src, "x = 1", NumMode::Rational);
        assert_eq!(out.state.get("x"), Some(&Value::int(1)));
        assert_eq!(out.state.get("r"), Some(&Value::int(2)));
    }

    #[test]
    fn binary64_rounds() {
        let out = run("x = 1/3", "", NumMode::Binary64);
        let x = out.state.get("x").unwrap().as_num().unwrap().clone();
        assert_ne!(x, Rational::new(1.into(), 3.into()));
        assert_eq!(x.to_f64().unwrap(), 1.0 / 3.0);
    }
}
