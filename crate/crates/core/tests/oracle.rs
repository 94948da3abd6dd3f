use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use proptest::prelude::*;
use refinery_core::oracle::*;
use refinery_core::prog_lang::render_program;
use refinery_core::refinement::*;
use refinery_core::verifier::*;

const SQRT: &str = "name: sqrt
constants: (N:float) (e:float)
variants: (x:float) (y:float)
pre: N >= 0 /\\ e > 0
post: x*x <= N < y*y /\\ y <= x+e
";

const SEQ: &str = "seq mid: x*x <= N < y*y";
const LOOP: &str = "iterate I: x*x <= N < y*y G: y > x+e V: y-x mode: initialised";
const BODY: [&str; 3] = ["ifelse G: (x+y)/2*(x+y)/2 > N", "assign y := (x+y)/2", "assign x := (x+y)/2"];

const BISECTION: &str = "x = 0
y = N+1
while y > x+e:
    if (x+y)/2*(x+y)/2 > N:
        y = (x+y)/2
    else:
        x = (x+y)/2
";

fn script(assigns: &[&str]) -> String {
    let mut lines = vec![SEQ];
    lines.extend(assigns);
    lines.push(LOOP);
    lines.extend(BODY);
    lines.join("\n")
}

fn grid() -> DomainSpec {
    DomainSpec::from_toml("[vars]\nN = [\"0\", \"1/2\", \"1\", \"2\", \"4\"]\ne = [\"1/2\"]\n").unwrap()
}

fn verifier(backends: &[&str]) -> Verifier {
    Verifier::new(VerifierConfig {
        backends: backends.iter().map(|s| s.to_string()).collect(),
        timeout: Duration::from_secs(10),
        domains: grid(),
        ..VerifierConfig::default()
    })
    .unwrap()
}

fn sqrt_tree() -> SpecTree {
    SpecTree::new(parse_spec_file(SQRT).unwrap().statement)
}

fn drive(text: &str, v: &Verifier) -> (SpecTree, DriveReport) {
    let mut tree = sqrt_tree();
    let mut oracle = ScriptedOracle::parse(text).unwrap();
    let report = drive_refinement(&mut tree, &mut oracle, v, &Library::new(), &DriveLimits::default());
    (tree, report)
}

fn program(tree: &SpecTree) -> String {
    render_program(&tree.extract_program().unwrap())
}

#[test]
fn scripted_sqrt_closes_with_bisection() {
    let (tree, r) = drive(&script(&["assign x := 0, y := N+1"]), &verifier(&["smt", "bounded"]));
    assert_eq!(r.outcome, DriveOutcome::FullyRefined);
    assert!(tree.is_closed());
    assert_eq!(r.failures, 0);
    assert_eq!(r.final_obligations.proved, r.final_obligations.total());
    assert_eq!(program(&tree), BISECTION);
}

#[test]
fn wrong_initialisation_is_refuted_then_corrected() {
    let (tree, r) = drive(&script(&["assign x := 0, y := N", "assign x := 0, y := N+1"]), &verifier(&["smt"]));
    assert_eq!(r.outcome, DriveOutcome::FullyRefined);
    assert_eq!(r.failures, 1);
    assert_eq!(r.attempts["0.0"], 2);
    let node = tree.node(tree.by_path("0.0").unwrap()).unwrap();
    assert_eq!(node.history.len(), 1);
    assert_eq!(node.history[0].proposal, "assign x := 0, y := N");
    assert!(node.history[0].reason.contains("refuted"), "{}", node.history[0].reason);
    assert!(r.transcript[1].outcome.contains("counterexample: "));
    assert_eq!(program(&tree), BISECTION);
}

#[test]
fn three_failures_backtrack_the_parent_once() {
    let text = format!(
        "@0 {SEQ}\n@0.0 assign x := 0, y := N\n@0.0 assign x := 1, y := N\n@0.0 assign x := N, y := N\n\
         @0 {SEQ}\n@0.0 assign x := 0, y := N+1\n@0.1 {LOOP}\n@0.1.0 {}\n@0.1.0.0 {}\n@0.1.0.1 {}\n",
        BODY[0], BODY[1], BODY[2]
    );
    let (tree, r) = drive(&text, &verifier(&["bounded"]));
    assert_eq!(r.outcome, DriveOutcome::FullyRefined);
    assert_eq!(r.parent_backtracks, 1);
    assert_eq!(r.failures, 3);
    let attempts: Vec<(&str, usize)> = r.attempts.iter().map(|(k, v)| (k.as_str(), *v)).collect();
    assert_eq!(attempts, [("0", 2), ("0.0", 4), ("0.1", 1), ("0.1.0", 1), ("0.1.0.0", 1), ("0.1.0.1", 1)]);
    let root = tree.node(tree.root()).unwrap();
    assert_eq!(root.history.len(), 1);
    assert!(root.history[0].reason.contains("3 failed proposals at node 0.0"));
    // the retried child starts with a clean history
    assert!(tree.node(tree.by_path("0.0").unwrap()).unwrap().history.is_empty());
    assert_eq!(program(&tree), BISECTION);
}

#[test]
fn ill_typed_proposals_exhaust_the_root() {
    let (tree, r) = drive("assign z := 0\nassign z := 1\nassign z := 2\nassign z := 3\n", &verifier(&["bounded"]));
    assert_eq!(r.outcome, DriveOutcome::Exhausted);
    assert_eq!(r.proposals, 3);
    assert_eq!(tree.node(tree.root()).unwrap().history.len(), 3);
    assert!(tree.node(tree.root()).unwrap().history.iter().all(|f| f.reason.contains("ill-typed")));
}

#[test]
fn running_out_of_script_exhausts() {
    let (_, r) = drive(SEQ, &verifier(&["bounded"]));
    assert_eq!(r.outcome, DriveOutcome::Exhausted);
    // node 0.0 fails three times, then the root three times
    assert_eq!(r.parent_backtracks, 1);
}

#[test]
fn scripted_drive_is_deterministic() {
    let text = script(&["assign x := 0, y := N", "assign x := 0, y := N+1"]);
    let v = verifier(&["bounded"]);
    let (t1, mut r1) = drive(&text, &v);
    let (t2, mut r2) = drive(&text, &v);
    r1.elapsed = Duration::ZERO;
    r2.elapsed = Duration::ZERO;
    assert_eq!(serde_json::to_string(&r1).unwrap(), serde_json::to_string(&r2).unwrap());
    assert_eq!(r1.transcript_jsonl(), r2.transcript_jsonl());
    assert_eq!(program(&t1), program(&t2));
}

#[test]
fn heuristic_refines_sqrt() {
    let mut tree = sqrt_tree();
    let mut oracle = HeuristicOracle::new(DomainSpec::default());
    let r = drive_refinement(&mut tree, &mut oracle, &verifier(&["smt", "bounded"]), &Library::new(), &DriveLimits::default());
    assert_eq!(r.outcome, DriveOutcome::FullyRefined, "{:?}\n{}", r.reason, tree.script().join("\n"));
    let p = program(&tree);
    assert!(p.starts_with("x = 0\ny = N+1\nwhile y > x+e:\n"), "{p}");
}

#[test]
fn heuristic_skips_when_pre_is_post() {
    let spec = "name: id\nconstants: (N:int)\nvariants: (x:int)\npre: x > N\npost: x > N\n";
    let mut tree = SpecTree::new(parse_spec_file(spec).unwrap().statement);
    let mut oracle = HeuristicOracle::new(DomainSpec::default());
    let r = drive_refinement(&mut tree, &mut oracle, &verifier(&["bounded"]), &Library::new(), &DriveLimits::default());
    assert_eq!(r.outcome, DriveOutcome::FullyRefined);
    assert_eq!(program(&tree), "pass\n");
}

#[test]
fn heuristic_suggests_a_branch_for_the_loop_body() {
    let mut tree = sqrt_tree();
    let lib = Library::new();
    for line in [SEQ, "assign x := 0, y := N+1", LOOP] {
        let id = tree.leftmost_open().unwrap();
        let law = parse_law(line, &tree.node(id).unwrap().stmt).unwrap();
        tree.apply(id, law, &lib).unwrap();
    }
    let body = tree.leftmost_open().unwrap();
    let ctx = OracleContext::for_node(&tree, body, &lib, 3).unwrap();
    let p = HeuristicOracle::new(DomainSpec::default()).propose(&ctx).unwrap();
    assert!(matches!(p.law, RefinementLaw::IfElse { .. } | RefinementLaw::Assign { .. }), "{}", p.law);
    assert_eq!(tree.leftmost_open(), Some(body));
}

#[test]
fn unknown_verdicts_block_closure_unless_accepted() {
    let v = Verifier::new(VerifierConfig {
        backends: vec!["bounded".into()],
        domains: DomainSpec { budget: 1, ..grid() },
        ..VerifierConfig::default()
    })
    .unwrap();
    let text = script(&["assign x := 0, y := N+1"]);
    let mut tree = sqrt_tree();
    let mut oracle = ScriptedOracle::parse(&text).unwrap();
    let r = drive_refinement(&mut tree, &mut oracle, &v, &Library::new(), &DriveLimits::default());
    assert_eq!(r.outcome, DriveOutcome::Exhausted);

    let mut tree = sqrt_tree();
    let mut oracle = ScriptedOracle::parse(&text).unwrap();
    let limits = DriveLimits { accept_unknown: true, ..DriveLimits::default() };
    let r = drive_refinement(&mut tree, &mut oracle, &v, &Library::new(), &limits);
    assert_eq!(r.outcome, DriveOutcome::Unverified);
    assert!(!tree.is_closed());
}

/// Serves `replies` as chat-completion responses, one per connection.
fn fake_endpoint(replies: Vec<String>) -> (String, std::thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let handle = std::thread::spawn(move || {
        let mut bodies = Vec::new();
        for reply in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            bodies.push(String::from_utf8(body).unwrap());
            let json = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": reply}}]}).to_string();
            let mut out = stream;
            write!(out, "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{json}", json.len())
                .unwrap();
        }
        bodies
    });
    (url, handle)
}

#[test]
fn remote_oracle_round_trip() {
    let (url, server) = fake_endpoint(vec!["Split first.\nseq mid: x*x <= N < y*y".into(), "no idea".into()]);
    let cfg = RemoteConfig { url: Some(url), model: "m1".into(), ..RemoteConfig::default() };
    let mut oracle = RemoteOracle::new(cfg);
    let ctx = OracleContext::new(sqrt_tree().node(0).unwrap().stmt.clone(), "0");
    let p = oracle.propose(&ctx).unwrap();
    assert_eq!(render_law(&p.law), "seq mid: x*x <= N /\\ N < y*y");
    assert!(p.raw.unwrap().starts_with("Split first."));
    assert!(matches!(oracle.propose(&ctx), Err(OracleError::NoProposalFound(_))));
    let bodies = server.join().unwrap();
    let sent: serde_json::Value = serde_json::from_str(&bodies[0]).unwrap();
    assert_eq!(sent["model"], "m1");
    assert_eq!(sent["messages"][1]["role"], "user");
    assert_eq!(sent["messages"][1]["content"], build_prompt(&ctx));
}

#[test]
fn unreachable_endpoint_is_a_retryable_transport_error() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/", listener.local_addr().unwrap());
    drop(listener);
    let mut oracle = RemoteOracle::new(RemoteConfig { url: Some(url), timeout_secs: 2, ..RemoteConfig::default() });
    let ctx = OracleContext::new(sqrt_tree().node(0).unwrap().stmt.clone(), "0");
    assert!(matches!(oracle.propose(&ctx), Err(OracleError::Transport { retryable: true, .. })));
}

const POOL: [&str; 8] = [
    SEQ,
    "assign x := 0, y := N+1",
    "assign x := 0, y := N",
    "assign z := 1",
    LOOP,
    "ifelse G: (x+y)/2*(x+y)/2 > N",
    "assign y := (x+y)/2",
    "assign x := (x+y)/2",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn drive_invariants(picks in proptest::collection::vec(0usize..POOL.len(), 0..14)) {
        let text: Vec<&str> = picks.iter().map(|k| POOL[*k]).collect();
        let v = verifier(&["bounded"]);
        let (tree, r) = drive(&text.join("\n"), &v);
        let (_, again) = drive(&text.join("\n"), &v);
        prop_assert_eq!(r.outcome == DriveOutcome::FullyRefined, tree.is_closed());
        if tree.is_closed() {
            prop_assert!(tree.obligations().iter().all(|o| o.status.is_proved()));
        }
        let rejected = r.transcript.iter().filter(|e| e.outcome.starts_with("rejected")).count();
        prop_assert_eq!(rejected, r.failures);
        prop_assert_eq!(r.proposals, r.attempts.values().sum::<usize>());
        prop_assert_eq!(r.transcript_jsonl(), again.transcript_jsonl());
        // without a parent backtrack nothing is ever removed from a history
        if r.parent_backtracks == 0 {
            let kept: usize = tree.preorder().iter().map(|id| tree.node(*id).unwrap().history.len()).sum();
            prop_assert_eq!(kept, r.failures);
        }
    }
}
