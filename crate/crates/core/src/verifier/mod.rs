//! Discharging proof obligations: bounded enumeration and an external SMT solver.

pub mod agreement;
mod bounded;
mod domain;
mod model;
mod prepare;
mod smt;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

pub use bounded::check_bounded;
pub use domain::{DomainSpec, Literal};
pub use model::{parse_sexps, Model, Sexp};
pub use prepare::Prepared;
pub use smt::{emit_smtlib, parse_answer, run_solver, SolverAnswer, SolverError};

use crate::refinement::{ObligationStatus, ProofObligation};
use crate::spec_lang::{SpecType, Valuation, Value};

pub const SMT_CMD_ENV: &str = "REFINERY_SMT_CMD";
pub const DEFAULT_SMT_CMD: &str = "z3";

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Proved,
    Refuted(Valuation),
    Unknown(String),
}

impl Verdict {
    pub fn is_definitive(&self) -> bool {
        !matches!(self, Verdict::Unknown(_))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VcResult {
    pub verdict: Verdict,
    pub backend: String,
    pub elapsed: Duration,
}

impl VcResult {
    pub fn status(&self) -> ObligationStatus {
        match &self.verdict {
            Verdict::Proved => ObligationStatus::Proved { backend: self.backend.clone() },
            Verdict::Refuted(cex) => {
                ObligationStatus::Refuted { backend: self.backend.clone(), counterexample: cex.clone() }
            }
            Verdict::Unknown(reason) => ObligationStatus::Unknown { reason: reason.clone() },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifierConfig {
    /// Backend names tried in order; the first definitive verdict wins.
    pub backends: Vec<String>,
    pub timeout: Duration,
    /// Solver command; falls back to `REFINERY_SMT_CMD`, then `z3`.
    pub smt_cmd: Option<String>,
    pub domains: DomainSpec,
    pub workers: usize,
}

impl Default for VerifierConfig {
    fn default() -> Self {
        VerifierConfig {
            backends: vec!["smt".into(), "bounded".into()],
            timeout: Duration::from_secs(10),
            smt_cmd: None,
            domains: DomainSpec::default(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl VerifierConfig {
    pub fn solver_command(&self) -> String {
        self.smt_cmd
            .clone()
            .or_else(|| std::env::var(SMT_CMD_ENV).ok().filter(|s| !s.trim().is_empty()))
            .unwrap_or_else(|| DEFAULT_SMT_CMD.to_string())
    }

    /// Whether the solver command was chosen explicitly rather than defaulted.
    pub fn solver_explicit(&self) -> bool {
        self.smt_cmd.is_some() || std::env::var(SMT_CMD_ENV).is_ok_and(|s| !s.trim().is_empty())
    }
}

/// A decision procedure for prepared obligations.
pub trait Backend: Send + Sync {
    fn name(&self) -> &str;
    fn check(&self, p: &Prepared, cfg: &VerifierConfig) -> Verdict;
}

pub struct BoundedBackend;

impl Backend for BoundedBackend {
    fn name(&self) -> &str {
        "bounded"
    }

    fn check(&self, p: &Prepared, cfg: &VerifierConfig) -> Verdict {
        check_bounded(p, &cfg.domains)
    }
}

pub struct SmtBackend;

impl Backend for SmtBackend {
    fn name(&self) -> &str {
        "smt"
    }

    fn check(&self, p: &Prepared, cfg: &VerifierConfig) -> Verdict {
        let script = match emit_smtlib(p) {
            Ok(s) => s,
            Err(e) => return Verdict::Unknown(format!("not expressible in SMT-LIB: {e}")),
        };
        let output = match run_solver(&cfg.solver_command(), &script, cfg.timeout) {
            Ok(o) => o,
            Err(e) => return Verdict::Unknown(e.to_string()),
        };
        match parse_answer(&output) {
            SolverAnswer::Unsat => Verdict::Proved,
            SolverAnswer::Unknown(r) => Verdict::Unknown(r),
            SolverAnswer::Sat(model) => refute_from_model(p, &model, &cfg.domains),
        }
    }
}

/// Turns a `sat` model into a validated counterexample.
///
/// A model that does not validate exactly (irrational or rounded values) seeds a
/// bounded search over rationals near it.
fn refute_from_model(p: &Prepared, model: &str, domains: &DomainSpec) -> Verdict {
    let v = match Model::parse(model).and_then(|m| m.valuation(p)) {
        Ok(v) => v,
        Err(e) => return Verdict::Unknown(format!("unreadable model: {e}")),
    };
    if p.refutes(&v, domains) {
        return Verdict::Refuted(v);
    }
    let mut near = DomainSpec { budget: 200_000, ..domains.clone() };
    for (name, value) in v.iter() {
        let around = match (value, p.type_of(name)) {
            (Value::Num(r), Some(SpecType::Float)) => model::neighbours(r).into_iter().map(Value::Num).collect(),
            (Value::Num(r), Some(SpecType::Nat | SpecType::Int)) => {
                let one = crate::spec_lang::Rational::from_integer(1.into());
                vec![Value::Num(r.clone()), Value::Num(r - &one), Value::Num(r + &one)]
            }
            _ => vec![value.clone()],
        };
        near.vars.insert(name.clone(), around);
    }
    match check_bounded(p, &near) {
        Verdict::Refuted(cex) => Verdict::Refuted(cex),
        _ => Verdict::Unknown("solver model did not validate".into()),
    }
}

/// Backends by name.
#[derive(Clone)]
pub struct BackendRegistry {
    backends: BTreeMap<String, Arc<dyn Backend>>,
}

impl Default for BackendRegistry {
    fn default() -> Self {
        let mut r = BackendRegistry { backends: BTreeMap::new() };
        r.register(Arc::new(SmtBackend));
        r.register(Arc::new(BoundedBackend));
        r
    }
}

impl BackendRegistry {
    pub fn register(&mut self, b: Arc<dyn Backend>) {
        self.backends.insert(b.name().to_string(), b);
    }

    pub fn get(&self, name: &str) -> Option<Arc<dyn Backend>> {
        self.backends.get(name).cloned()
    }

    pub fn names(&self) -> Vec<String> {
        self.backends.keys().cloned().collect()
    }
}

/// Portfolio checker over registered backends.
#[derive(Clone)]
pub struct Verifier {
    pub registry: BackendRegistry,
    pub config: VerifierConfig,
}

impl Verifier {
    pub fn new(config: VerifierConfig) -> Result<Self, String> {
        let registry = BackendRegistry::default();
        for b in &config.backends {
            if registry.get(b).is_none() {
                return Err(format!("unknown verifier backend `{b}` (known: {})", registry.names().join(", ")));
            }
        }
        Ok(Verifier { registry, config })
    }

    /// Runs each backend in order until one gives a definitive verdict.
    pub fn check(&self, ob: &ProofObligation) -> VcResult {
        let start = Instant::now();
        let p = Prepared::new(ob);
        let mut reasons = Vec::new();
        for name in &self.config.backends {
            let Some(backend) = self.registry.get(name) else {
                reasons.push(format!("{name}: not registered"));
                continue;
            };
            match backend.check(&p, &self.config) {
                Verdict::Unknown(r) => reasons.push(format!("{name}: {r}")),
                Verdict::Refuted(cex) => {
                    return VcResult {
                        verdict: Verdict::Refuted(p.display_names(&cex)),
                        backend: name.clone(),
                        elapsed: start.elapsed(),
                    }
                }
                Verdict::Proved => {
                    return VcResult { verdict: Verdict::Proved, backend: name.clone(), elapsed: start.elapsed() }
                }
            }
        }
        VcResult { verdict: Verdict::Unknown(reasons.join("; ")), backend: "none".into(), elapsed: start.elapsed() }
    }

    /// Checks every obligation, in parallel, and records the statuses.
    pub fn check_all(&self, obs: &mut [ProofObligation]) -> Vec<VcResult> {
        let results: Mutex<Vec<Option<VcResult>>> = Mutex::new(vec![None; obs.len()]);
        let next = AtomicUsize::new(0);
        let shared: &[ProofObligation] = obs;
        std::thread::scope(|s| {
            for _ in 0..self.config.workers.clamp(1, shared.len().max(1)) {
                s.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    let Some(ob) = shared.get(k) else { break };
                    let r = self.check(ob);
                    results.lock().expect("no poisoned workers")[k] = Some(r);
                });
            }
        });
        let results: Vec<VcResult> =
            results.into_inner().expect("no poisoned workers").into_iter().map(|r| r.expect("checked")).collect();
        for (ob, r) in obs.iter_mut().zip(&results) {
            ob.status = r.status();
        }
        results
    }

    /// Confirms the solver command can be started and answers a trivial query.
    pub fn probe_solver(&self) -> Result<(), SolverError> {
        let out = run_solver(&self.config.solver_command(), "(check-sat)\n", self.config.timeout)?;
        match parse_answer(&out) {
            SolverAnswer::Sat(_) => Ok(()),
            _ => Err(SolverError::Io(format!("unexpected reply to a trivial query: {}", out.trim()))),
        }
    }
}
