//! Cross-checking the SMT backend against bounded enumeration on random obligations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spec_lang::{ArithOp, RelOp, SpecExpr, SpecType, TypedParam, Value};

use super::{check_bounded, DomainSpec, Prepared, SmtBackend, Backend, Verdict, VerifierConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct AgreementCase {
    pub hypothesis: SpecExpr,
    pub conclusion: SpecExpr,
    pub smt: Verdict,
    pub bounded: Verdict,
}

impl AgreementCase {
    /// SMT proves what enumeration refutes, or refutes with a model enumeration proves.
    pub fn contradicts(&self) -> bool {
        matches!(
            (&self.smt, &self.bounded),
            (Verdict::Proved, Verdict::Refuted(_)) | (Verdict::Refuted(_), Verdict::Proved)
        )
    }
}

#[derive(Clone, Debug, Default)]
pub struct AgreementReport {
    pub cases: Vec<AgreementCase>,
    /// Refuted verdicts whose counterexample failed to re-validate.
    pub invalid_counterexamples: usize,
}

impl AgreementReport {
    pub fn both_definitive(&self) -> usize {
        self.cases.iter().filter(|c| c.smt.is_definitive() && c.bounded.is_definitive()).count()
    }

    pub fn contradictions(&self) -> usize {
        self.cases.iter().filter(|c| c.contradicts()).count()
    }
}

pub fn agreement_env() -> Vec<TypedParam> {
    vec![
        TypedParam::new("x", SpecType::Int),
        TypedParam::new("y", SpecType::Int),
        TypedParam::new("z", SpecType::Float),
    ]
}

fn term(rng: &mut ChaCha8Rng, depth: u32) -> SpecExpr {
    if depth == 0 || rng.random_bool(0.4) {
        return match rng.random_range(0..5) {
            0 => SpecExpr::name("x"),
            1 => SpecExpr::name("y"),
            2 => SpecExpr::name("z"),
            _ => SpecExpr::int(rng.random_range(-2..=2)),
        };
    }
    let op = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul][rng.random_range(0..3)];
    SpecExpr::arith(op, term(rng, depth - 1), term(rng, depth - 1))
}

fn atom(rng: &mut ChaCha8Rng) -> SpecExpr {
    let op = [RelOp::Lt, RelOp::Le, RelOp::Eq, RelOp::Ne, RelOp::Ge][rng.random_range(0..5)];
    SpecExpr::rel(op, term(rng, 2), term(rng, 1))
}

/// A random obligation over `x, y: int` and `z: float`.
pub fn random_obligation(rng: &mut ChaCha8Rng) -> (SpecExpr, SpecExpr) {
    let hyp = SpecExpr::conj((0..rng.random_range(0..3)).map(|_| atom(rng)));
    let concl = if rng.random_bool(0.3) { SpecExpr::Or(vec![atom(rng), atom(rng)]) } else { atom(rng) };
    (hyp, concl)
}

/// Checks `n` seeded random obligations with both backends.
///
/// When the solver refutes, the bounded domain is widened with the model's
/// values, so a disagreement is a genuine contradiction.
pub fn run_agreement(seed: u64, n: usize, cfg: &VerifierConfig) -> AgreementReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let env = agreement_env();
    let mut report = AgreementReport::default();
    for _ in 0..n {
        let (hypothesis, conclusion) = random_obligation(&mut rng);
        let p = Prepared::from_parts(&hypothesis, &conclusion, &env);
        let smt = SmtBackend.check(&p, cfg);
        let mut domain = cfg.domains.clone();
        if let Verdict::Refuted(cex) = &smt {
            for (name, value) in cex.iter() {
                let ty = p.type_of(name).cloned().unwrap_or(SpecType::Float);
                let mut carrier: Vec<Value> = domain.values_for(name, &ty);
                if !carrier.contains(value) {
                    carrier.push(value.clone());
                }
                domain.vars.insert(name.clone(), carrier);
            }
        }
        let bounded = check_bounded(&p, &domain);
        for v in [&smt, &bounded] {
            if let Verdict::Refuted(cex) = v {
                if !p.refutes(cex, &domain) {
                    report.invalid_counterexamples += 1;
                }
            }
        }
        report.cases.push(AgreementCase { hypothesis, conclusion, smt, bounded });
    }
    report
}

impl DomainSpec {
    /// A small domain for agreement runs.
    pub fn agreement() -> DomainSpec {
        DomainSpec { int: (-3, 3), budget: 1_000_000, ..DomainSpec::default() }
    }
}
