use std::time::Duration;

use refinery_core::refinement::*;
use refinery_core::spec_lang::{parse_rational, parse_spec_expr, Rational, Value};
use refinery_core::verifier::agreement::run_agreement;
use refinery_core::verifier::*;

const SQRT: &str = "name: sqrt
constants: (N:float) (e:float)
variants: (x:float) (y:float)
pre: N >= 0 /\\ e > 0
post: x*x <= N < y*y /\\ y <= x+e
";

fn script(assign: &str) -> Vec<String> {
    [
        "seq mid: x*x <= N < y*y",
        assign,
        "iterate I: x*x <= N < y*y G: y > x+e V: y-x mode: initialised",
        "ifelse G: (x+y)/2*(x+y)/2 > N",
        "assign y := (x+y)/2",
        "assign x := (x+y)/2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn sqrt_obligations(assign: &str) -> Vec<ProofObligation> {
    let lib = Library::new();
    let mut tree = SpecTree::new(parse_spec_file(SQRT).unwrap().statement);
    for line in script(assign) {
        let id = tree.leftmost_open().unwrap();
        let law = parse_law(&line, &tree.node(id).unwrap().stmt).unwrap();
        tree.apply(id, law, &lib).unwrap();
    }
    tree.obligations().into_iter().cloned().collect()
}

fn grid() -> DomainSpec {
    DomainSpec::from_toml("[vars]\nN = [\"0\", \"1/2\", \"1\", \"2\", \"4\"]\ne = [\"1/2\"]\n").unwrap()
}

fn config(backends: &[&str], domains: DomainSpec) -> VerifierConfig {
    VerifierConfig {
        backends: backends.iter().map(|s| s.to_string()).collect(),
        timeout: Duration::from_secs(10),
        domains,
        ..VerifierConfig::default()
    }
}

fn solver_available() -> bool {
    Verifier::new(VerifierConfig::default()).unwrap().probe_solver().is_ok()
}

#[test]
fn sqrt_obligations_bounded() {
    let v = Verifier::new(config(&["bounded"], grid())).unwrap();
    for ob in sqrt_obligations("assign x := 0, y := N+1") {
        assert_eq!(v.check(&ob).verdict, Verdict::Proved, "{ob}");
    }
}

#[test]
fn sqrt_obligations_smt() {
    if !solver_available() {
        eprintln!("solver unavailable; skipping");
        return;
    }
    let v = Verifier::new(config(&["smt"], grid())).unwrap();
    for ob in sqrt_obligations("assign x := 0, y := N+1") {
        let r = v.check(&ob);
        assert_eq!(r.verdict, Verdict::Proved, "{ob}");
        assert!(r.elapsed < Duration::from_secs(10));
    }
}

#[test]
fn y_equals_n_is_refuted_below_one() {
    let one = Rational::from_integer(1.into());
    let mut backends = vec!["bounded"];
    if solver_available() {
        backends.push("smt");
    }
    for b in backends {
        let v = Verifier::new(config(&[b], grid())).unwrap();
        let obs = sqrt_obligations("assign x := 0, y := N");
        let assign = obs.iter().find(|o| o.label == "assign" && o.law.ends_with("y := N")).unwrap();
        let Verdict::Refuted(cex) = v.check(assign).verdict else { panic!("{b} did not refute") };
        let n = cex.get("N").and_then(Value::as_num).unwrap().clone();
        assert!(n < one, "{b}: {cex}");
    }
}

#[test]
fn textbook_refutation_on_grid() {
    let env = refinery_core::spec_lang::parse_params("(N:float)").unwrap();
    let p = Prepared::from_parts(
        &parse_spec_expr("N >= 0", &env).unwrap(),
        &parse_spec_expr("N*N >= N", &env).unwrap(),
        &env,
    );
    let d = grid();
    assert_eq!(check_bounded(&p, &d), Verdict::Refuted(
        refinery_core::spec_lang::Valuation::new().with("N", Value::Num(parse_rational("1/2").unwrap()))
    ));
    if solver_available() {
        let Verdict::Refuted(cex) = SmtBackend.check(&p, &config(&["smt"], d.clone())) else { panic!() };
        assert!(p.refutes(&cex, &d));
    }
    let q = Prepared::from_parts(&parse_spec_expr("N >= 0", &env).unwrap(), &parse_spec_expr("N >= 0", &env).unwrap(), &env);
    assert_eq!(check_bounded(&q, &d), Verdict::Proved);
}

#[test]
fn missing_solver_falls_back_to_bounded() {
    let mut cfg = config(&["smt", "bounded"], grid());
    cfg.smt_cmd = Some("/nonexistent/solver".into());
    let v = Verifier::new(cfg).unwrap();
    assert!(matches!(v.probe_solver(), Err(SolverError::Spawn(..))));
    let r = v.check(&sqrt_obligations("assign x := 0, y := N+1")[0]);
    assert_eq!((r.verdict, r.backend.as_str()), (Verdict::Proved, "bounded"));
}

#[test]
fn budget_overflow_is_unknown() {
    let mut d = grid();
    d.budget = 3;
    let v = Verifier::new(config(&["bounded"], d)).unwrap();
    assert!(matches!(v.check(&sqrt_obligations("assign x := 0, y := N+1")[1]).verdict, Verdict::Unknown(_)));
}

#[test]
fn check_all_records_statuses() {
    let v = Verifier::new(config(&["bounded"], grid())).unwrap();
    let mut obs = sqrt_obligations("assign x := 0, y := N");
    let results = v.check_all(&mut obs);
    assert_eq!(results.len(), obs.len());
    assert_eq!(obs.iter().filter(|o| o.status.is_refuted()).count(), 1);
    assert!(Verifier::new(config(&["oracle"], grid())).is_err());
}

#[test]
fn backends_agree_on_random_obligations() {
    if !solver_available() {
        eprintln!("solver unavailable; skipping");
        return;
    }
    let cfg = config(&["smt"], DomainSpec::agreement());
    let report = run_agreement(7, 60, &cfg);
    assert_eq!(report.contradictions(), 0, "{:#?}", report.cases.iter().filter(|c| c.contradicts()).collect::<Vec<_>>());
    assert_eq!(report.invalid_counterexamples, 0);
    assert!(report.both_definitive() >= 50, "{}", report.both_definitive());
}

#[test]
fn enlarging_domains_keeps_refutations() {
    let obs = sqrt_obligations("assign x := 0, y := N");
    let small = Verifier::new(config(&["bounded"], grid())).unwrap();
    let mut big_domain = grid();
    big_domain.vars.get_mut("N").unwrap().push(Value::Num(parse_rational("9").unwrap()));
    big_domain.float.push(parse_rational("7").unwrap());
    let big = Verifier::new(config(&["bounded"], big_domain)).unwrap();
    for ob in &obs {
        if matches!(small.check(ob).verdict, Verdict::Refuted(_)) {
            assert!(matches!(big.check(ob).verdict, Verdict::Refuted(_)));
        }
    }
}
