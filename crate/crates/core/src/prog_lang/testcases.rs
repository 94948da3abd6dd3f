//! Test-case files and the test runner.
//!
//! A file is a list of blank-line separated cases:
//!
//! ```text
//! input: N = 1/2, e = 1/2
//! check: x*x <= N /\ N < y*y
//! ```
//!
//! `check` is evaluated on the final state; `x_0` reads the input.

use num_traits::{Signed, ToPrimitive};

use crate::spec_lang::{
    eval_bool, parse_spec_expr_untyped, render_spec_expr, Carriers, SpecExpr, SpecType, Valuation,
    Value,
};

use super::interp::{interpret, NumMode, RunStatus};
use super::ast::Statement;

#[derive(Clone, Debug, PartialEq)]
pub struct TestCase {
    pub input: Valuation,
    pub check: SpecExpr,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("test file line {line}: {message}")]
pub struct TestFileError {
    pub line: usize,
    pub message: String,
}

pub fn parse_test_cases(text: &str) -> Result<Vec<TestCase>, TestFileError> {
    let mut out = Vec::new();
    let mut input: Option<(Valuation, usize)> = None;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let err = |message: String| TestFileError { line, message };
        if let Some(rest) = t.strip_prefix("input:") {
            if input.is_some() {
                return Err(err("`input:` without a `check:`".into()));
            }
            let v = Valuation::parse_bindings(rest.trim()).map_err(|e| err(e.to_string()))?;
            input = Some((v, line));
        } else if let Some(rest) = t.strip_prefix("check:") {
            let (v, _) = input.take().ok_or_else(|| err("`check:` without an `input:`".into()))?;
            let check = parse_spec_expr_untyped(rest.trim()).map_err(|e| err(e.to_string()))?;
            out.push(TestCase { input: v, check });
        } else {
            return Err(err(format!("expected `input:` or `check:`, got `{t}`")));
        }
    }
    if let Some((_, line)) = input {
        return Err(TestFileError { line, message: "`input:` without a `check:`".into() });
    }
    Ok(out)
}

pub fn render_test_cases(cases: &[TestCase]) -> String {
    cases
        .iter()
        .map(|c| format!("input: {}\ncheck: {}\n", c.input, render_spec_expr(&c.check)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Integer carriers sized from the values in a state, for quantifiers in checks.
pub struct StateCarriers {
    bound: i64,
}

impl StateCarriers {
    pub fn for_states(states: &[&Valuation]) -> Self {
        fn walk(v: &Value, m: &mut i64) {
            match v {
                Value::Num(r) => {
                    let a = r.abs().ceil().to_integer().to_i64().unwrap_or(i64::MAX);
                    *m = (*m).max(a);
                }
                Value::Array(items) => {
                    *m = (*m).max(items.len() as i64);
                    items.iter().for_each(|i| walk(i, m));
                }
                Value::Bool(_) => {}
            }
        }
        let mut m = 0;
        for s in states {
            s.iter().for_each(|(_, v)| walk(v, &mut m));
        }
        StateCarriers { bound: (m + 1).min(10_000) }
    }
}

impl Carriers for StateCarriers {
    fn carrier(&self, name: &str, ty: &SpecType) -> Result<Vec<Value>, String> {
        match ty {
            SpecType::Bool => Ok(vec![Value::Bool(false), Value::Bool(true)]),
            SpecType::Nat => Ok((0..=self.bound).map(Value::int).collect()),
            SpecType::Int => Ok((-self.bound..=self.bound).map(Value::int).collect()),
            other => Err(format!("no test carrier for `{name}` of type {other}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseResult {
    pub index: usize,
    pub passed: bool,
    pub message: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TestReport {
    pub cases: Vec<CaseResult>,
}

impl TestReport {
    pub fn passed(&self) -> usize {
        self.cases.iter().filter(|c| c.passed).count()
    }

    pub fn total(&self) -> usize {
        self.cases.len()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.total()
    }
}

/// Runs each case and checks its formula on the final state.
pub fn run_tests(p: &Statement, cases: &[TestCase], step_limit: u64, mode: NumMode) -> TestReport {
    let cases = cases
        .iter()
        .enumerate()
        .map(|(index, case)| {
            let fail = |m: String| CaseResult { index, passed: false, message: Some(m) };
            let out = match interpret(p, &case.input, step_limit, mode) {
                Ok(out) => out,
                Err(e) => return fail(format!("runtime error: {e}")),
            };
            match &out.status {
                RunStatus::Completed => {}
                RunStatus::StepLimit => return fail("step limit reached".into()),
                RunStatus::AssertFailed { location, .. } => {
                    return fail(format!("{location} failed"))
                }
            }
            let dom = StateCarriers::for_states(&[&case.input, &out.state]);
            match eval_bool(&case.check, &out.state, &case.input, &dom) {
                Ok(true) => CaseResult { index, passed: true, message: None },
                Ok(false) => fail(format!("check failed with final state {}", out.state)),
                Err(e) => fail(format!("check could not be evaluated: {e}")),
            }
        })
        .collect();
    TestReport { cases }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prog_lang::parse_program;

    #[test]
    fn parse_and_run() {
        let cases = parse_test_cases("input: x = 1\ncheck: y = x_0 + 1\n\ninput: x = 5\ncheck: y = 6\n").unwrap();
        assert_eq!(cases.len(), 2);
        let p = parse_program("y = x + 1").unwrap();
        let report = run_tests(&p, &cases, 100, NumMode::Rational);
        assert_eq!(report.passed(), 2);
        assert_eq!(parse_test_cases(&render_test_cases(&cases)).unwrap(), cases);
    }

    #[test]
    fn empty_list_passes() {
        let report = run_tests(&Statement::Pass, &[], 10, NumMode::Rational);
        assert!(report.all_passed());
        assert_eq!(report.total(), 0);
    }

    #[test]
    fn malformed_files() {
        assert!(parse_test_cases("check: true").is_err());
        assert!(parse_test_cases("input: x = 1").is_err());
        assert!(parse_test_cases("nonsense").is_err());
    }

    #[test]
    fn quantified_check() {
        let cases = parse_test_cases("input: a = [3, 1]\ncheck: forall (k:nat), k < len(a) -> a[k] = 0").unwrap();
        let p = parse_program("a[0] = 0\na[1] = 0").unwrap();
        assert!(run_tests(&p, &cases, 100, NumMode::Rational).all_passed());
    }
}
