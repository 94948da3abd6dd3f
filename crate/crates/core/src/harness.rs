//! Running extracted programs against their specifications.
//!
//! Inputs are enumerated from a [`DomainSpec`] over the constants and the
//! variants the precondition reads; other variants start at their type's
//! default value. A run passes when the postcondition holds on the final
//! state, with `x_0` reading the input.

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::prog_lang::{interpret, NumMode, RunStatus, StateCarriers, Statement, TestCase, DEFAULT_STEP_LIMIT};
use crate::refinement::SpecStatement;
use crate::spec_lang::{eval_bool, TypedParam, Valuation, Value};
use crate::verifier::DomainSpec;

/// Every grid point satisfying the precondition, in enumeration order.
///
/// Fails when the grid has more than `limit` points.
pub fn enumerate_inputs(stmt: &SpecStatement, domains: &DomainSpec, limit: usize) -> Result<Vec<Valuation>, String> {
    let read = stmt.pre.free_vars();
    let mut axes: Vec<(&TypedParam, Vec<Value>)> = Vec::new();
    let mut base = Valuation::new();
    for p in stmt.constants.iter().chain(&stmt.frame) {
        if stmt.constants.contains(p) || read.contains(&p.name) {
            axes.push((p, domains.values_for(&p.name, &p.ty)));
        } else {
            base.set(p.name.clone(), Value::default_for(&p.ty));
        }
    }
    let points = axes.iter().try_fold(1usize, |acc, (_, vs)| acc.checked_mul(vs.len()));
    match points {
        Some(n) if n <= limit => {}
        _ => return Err(format!("the input grid exceeds {limit} points")),
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let mut v = base.clone();
        for ((p, vs), k) in axes.iter().zip(&idx) {
            v.set(p.name.clone(), vs[*k].clone());
        }
        let dom = StateCarriers::for_states(&[&v]);
        if eval_bool(&stmt.pre, &v, &v, &dom) == Ok(true) {
            out.push(v);
        }
        let mut pos = axes.len();
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < axes[pos].1.len() {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Why a run did not establish the postcondition, if it did not.
pub fn run_against(program: &Statement, stmt: &SpecStatement, input: &Valuation) -> Option<String> {
    let out = match interpret(program, input, DEFAULT_STEP_LIMIT, NumMode::Rational) {
        Ok(out) => out,
        Err(e) => return Some(format!("runtime error: {e}")),
    };
    match &out.status {
        RunStatus::Completed => {}
        RunStatus::StepLimit => return Some("step limit reached".into()),
        RunStatus::AssertFailed { location, .. } => return Some(format!("{location} failed")),
    }
    let dom = StateCarriers::for_states(&[input, &out.state]);
    match eval_bool(&stmt.post, &out.state, input, &dom) {
        Ok(true) => None,
        Ok(false) => Some(format!("postcondition fails with final state {}", out.state)),
        Err(e) => Some(format!("postcondition could not be evaluated: {e}")),
    }
}

#[derive(Clone, Debug, Default, PartialEq, serde::Serialize)]
pub struct SoundnessReport {
    /// Grid points satisfying the precondition.
    pub inputs: usize,
    pub satisfied: usize,
    /// Failing inputs, rendered, with the reason.
    pub failures: Vec<(String, String)>,
}

impl SoundnessReport {
    pub fn all_satisfied(&self) -> bool {
        self.satisfied == self.inputs
    }
}

/// Runs `program` on every in-domain input satisfying the precondition.
pub fn check_exhaustively(
    program: &Statement,
    stmt: &SpecStatement,
    domains: &DomainSpec,
    limit: usize,
) -> Result<SoundnessReport, String> {
    let inputs = enumerate_inputs(stmt, domains, limit)?;
    let mut r = SoundnessReport { inputs: inputs.len(), ..Default::default() };
    for v in &inputs {
        match run_against(program, stmt, v) {
            None => r.satisfied += 1,
            Some(why) => r.failures.push((v.to_string(), why)),
        }
    }
    Ok(r)
}

/// `n` test cases drawn with a seeded generator from the in-domain inputs,
/// each checked against the postcondition.
pub fn sample_cases(
    stmt: &SpecStatement,
    domains: &DomainSpec,
    n: usize,
    seed: u64,
    limit: usize,
) -> Result<Vec<TestCase>, String> {
    let inputs = enumerate_inputs(stmt, domains, limit)?;
    if inputs.is_empty() {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| TestCase { input: inputs.choose(&mut rng).expect("nonempty").clone(), check: stmt.post.clone() })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prog_lang::parse_program;
    use crate::refinement::parse_spec_file;

    fn abs() -> SpecStatement {
        parse_spec_file("name: abs\nconstants: (X:int)\nvariants: (y:int)\npre: true\npost: y >= 0 /\\ (y = X \\/ y = 0-X)\n")
            .unwrap()
            .statement
    }

    #[test]
    fn grid_and_defaults() {
        let inputs = enumerate_inputs(&abs(), &DomainSpec::default(), 100).unwrap();
        assert_eq!(inputs.len(), 7);
        assert_eq!(inputs[0].to_string(), "X = -3, y = 0");
        assert!(enumerate_inputs(&abs(), &DomainSpec::default(), 3).is_err());
    }

    #[test]
    fn exhaustive_run() {
        let good = parse_program("if X >= 0:\n    y = X\nelse:\n    y = 0-X\n").unwrap();
        let r = check_exhaustively(&good, &abs(), &DomainSpec::default(), 100).unwrap();
        assert!(r.all_satisfied());
        let bad = parse_program("y = X").unwrap();
        let r = check_exhaustively(&bad, &abs(), &DomainSpec::default(), 100).unwrap();
        assert_eq!((r.inputs, r.satisfied), (7, 4));
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_cases(&abs(), &DomainSpec::default(), 20, 5, 100).unwrap();
        assert_eq!(a.len(), 20);
        assert_eq!(a, sample_cases(&abs(), &DomainSpec::default(), 20, 5, 100).unwrap());
    }
}
