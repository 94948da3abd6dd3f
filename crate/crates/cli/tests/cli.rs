use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BISECTION: &str = "x = 0
y = N+1
while y > x+e:
    if (x+y)/2*(x+y)/2 > N:
        y = (x+y)/2
    else:
        x = (x+y)/2
";

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn refinery(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refinery")).current_dir(dir).args(args).output().expect("binary runs")
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn refine_sqrt(dir: &Path, extra: &[&str]) -> Output {
    let sqrt = corpus("sqrt");
    let spec = sqrt.join("problem.spec");
    let script = sqrt.join("problem.refine");
    let domains = sqrt.join("domain.toml");
    let out = dir.join("sqrt.prog");
    let mut args = vec!["refine", s(&spec), "--script", s(&script), "--domains", s(&domains), "--out", s(&out)];
    args.extend(extra);
    refinery(dir, &args)
}

#[test]
fn refine_sqrt_writes_the_expected_program_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = refine_sqrt(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert_eq!(std::fs::read_to_string(dir.path().join("sqrt.prog")).unwrap(), BISECTION);
    let report = std::fs::read_to_string(dir.path().join("sqrt.prog.obligations.txt")).unwrap();
    assert!(report.ends_with("4/4 obligations proved\n"), "{report}");
    let transcript = std::fs::read_to_string(dir.path().join("sqrt.prog.transcript.jsonl")).unwrap();
    assert_eq!(transcript.lines().count(), 6);
    assert!(dir.path().join("sqrt.prog.session").is_file());
}

#[test]
fn refine_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    refine_sqrt(a.path(), &[]);
    refine_sqrt(b.path(), &[]);
    for f in ["sqrt.prog", "sqrt.prog.obligations.txt", "sqrt.prog.transcript.jsonl", "sqrt.prog.session"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f}");
    }
}

#[test]
fn check_replays_a_saved_session() {
    let dir = tempfile::tempdir().unwrap();
    refine_sqrt(dir.path(), &[]);
    let sqrt = corpus("sqrt");
    let session = dir.path().join("sqrt.prog.session");
    let spec = sqrt.join("problem.spec");
    let domains = sqrt.join("domain.toml");
    let o = refinery(dir.path(), &["check", s(&spec), s(&session), "--domains", s(&domains)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    let out = text(&o);
    assert!(out.contains("4/4 obligations proved") && out.contains("closed"), "{out}");
}

#[test]
fn missing_spec_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = refinery(dir.path(), &["refine", "nope.spec", "--oracle", "heuristic"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).starts_with("error: "), "{}", text(&o));
}

#[test]
fn heuristic_skips_when_pre_establishes_post() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("id.spec");
    std::fs::write(&spec, "name: id\nconstants: (N:int)\nvariants: (x:int)\npre: x = N\npost: x = N\n").unwrap();
    let o = refinery(dir.path(), &["refine", s(&spec), "--oracle", "heuristic"]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert_eq!(std::fs::read_to_string(dir.path().join("id.prog")).unwrap(), "pass\n");
}

#[test]
fn exhausted_refinement_exits_2_without_a_program() {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/unprovable");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.prog");
    let spec = fixture.join("problem.spec");
    let script = fixture.join("problem.refine");
    let o = refinery(dir.path(), &["refine", s(&spec), "--script", s(&script), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(!out.exists());
    assert!(dir.path().join("u.prog.obligations.txt").is_file());
}

#[test]
fn run_passes_the_bundled_sqrt_tests() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("sqrt.prog");
    std::fs::write(&prog, BISECTION).unwrap();
    let tests = corpus("sqrt").join("problem.tests");
    let o = refinery(dir.path(), &["run", s(&prog), s(&tests)]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("5/5 passed"));
}

#[test]
fn wrong_initialisation_fails_below_one() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("bad.prog");
    std::fs::write(&prog, BISECTION.replace("y = N+1", "y = N")).unwrap();
    let tests = corpus("sqrt").join("problem.tests");
    let o = refinery(dir.path(), &["run", s(&prog), s(&tests)]);
    assert_eq!(o.status.code(), Some(4));
    let out = text(&o);
    assert!(out.contains("case 2: FAIL (N = 1/2, e = 1/2)"), "{out}");
    assert!(out.contains("case 4: pass"), "{out}");
}

#[test]
fn eval_on_an_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let o = refinery(dir.path(), &["eval", s(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", text(&o));
    assert!(text(&o).contains("refined 0/0, verified 0/0"));
}

#[test]
fn bad_solver_command_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = refine_sqrt(dir.path(), &["--smt-cmd", "/nonexistent/solver"]);
    assert_eq!(o.status.code(), Some(3), "{}", text(&o));
}

#[test]
fn laws_lists_the_catalog() {
    let dir = tempfile::tempdir().unwrap();
    let o = refinery(dir.path(), &["laws"]);
    assert_eq!(o.status.code(), Some(0));
    for k in ["skip", "assign", "seq", "iterate", "ifelse", "traverse", "call"] {
        assert!(text(&o).lines().any(|l| l == k), "{k}");
    }
}
