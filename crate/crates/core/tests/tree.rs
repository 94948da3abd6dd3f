use proptest::prelude::*;
use refinery_core::prog_lang::{parse_program, render_program};
use refinery_core::refinement::*;

const SQRT: &str = "name: sqrt
constants: (N:float) (e:float)
variants: (x:float) (y:float)
pre: N >= 0 /\\ e > 0
post: x*x <= N < y*y /\\ y <= x+e
";

const SQRT_SCRIPT: [&str; 6] = [
    "seq mid: x*x <= N < y*y",
    "assign x := 0, y := N+1",
    "iterate I: x*x <= N < y*y G: y > x+e V: y-x mode: initialised",
    "ifelse G: (x+y)/2*(x+y)/2 > N",
    "assign y := (x+y)/2",
    "assign x := (x+y)/2",
];

const BISECTION: &str = "x = 0
y = N+1
while y > x+e:
    if (x+y)/2*(x+y)/2 > N:
        y = (x+y)/2
    else:
        x = (x+y)/2
";

fn apply_next(tree: &mut SpecTree, line: &str, lib: &Library) -> NodeId {
    let id = tree.leftmost_open().expect("an open node");
    let law = parse_law(line, &tree.node(id).unwrap().stmt).unwrap();
    tree.apply(id, law, lib).unwrap();
    id
}

fn sqrt_tree() -> SpecTree {
    let lib = Library::new();
    let mut tree = SpecTree::new(parse_spec_file(SQRT).unwrap().statement);
    for line in SQRT_SCRIPT {
        apply_next(&mut tree, line, &lib);
    }
    tree
}

fn prove_all(tree: &mut SpecTree) {
    for id in tree.preorder() {
        if let Ok(obs) = tree.obligations_mut(id) {
            for o in obs {
                o.status = ObligationStatus::Proved { backend: "test".into() };
            }
        }
    }
}

#[test]
fn sqrt_script_extracts_bisection() {
    let tree = sqrt_tree();
    assert!(tree.open_nodes().is_empty());
    let program = tree.extract_program().unwrap();
    assert_eq!(program, parse_program(BISECTION).unwrap());
    assert_eq!(render_program(&program), BISECTION);
    assert_eq!(tree.obligations().len(), 4);
}

#[test]
fn status_follows_obligations() {
    let mut tree = sqrt_tree();
    assert_eq!(tree.status(tree.root()), NodeStatus::Refined);
    prove_all(&mut tree);
    assert!(tree.is_closed());
    let leaf = tree.by_path("0.0").unwrap();
    tree.obligations_mut(leaf).unwrap()[0].status =
        ObligationStatus::Refuted { backend: "test".into(), counterexample: Default::default() };
    assert_eq!(tree.status(leaf), NodeStatus::Failed);
    assert_eq!(tree.status(tree.root()), NodeStatus::Failed);
    assert_eq!(tree.status(tree.by_path("0.1").unwrap()), NodeStatus::Closed);
}

#[test]
fn paths_and_script() {
    let tree = sqrt_tree();
    let paths: Vec<String> = tree.preorder().into_iter().map(|id| tree.path(id).unwrap()).collect();
    assert_eq!(paths, ["0", "0.0", "0.1", "0.1.0", "0.1.0.0", "0.1.0.1"]);
    for p in &paths {
        assert_eq!(&tree.path(tree.by_path(p).unwrap()).unwrap(), p);
    }
    assert!(tree.by_path("0.2").is_err());
    assert!(tree.by_path("1").is_err());
    let script = tree.script();
    assert_eq!(script[0], "@0 seq mid: x*x <= N /\\ N < y*y");
    assert_eq!(script[5], "@0.1.0.1 assign x := (x+y)/2");
}

#[test]
fn errors() {
    let lib = Library::new();
    let mut tree = SpecTree::new(parse_spec_file(SQRT).unwrap().statement);
    let root = tree.root();
    assert!(matches!(tree.backtrack(root, "nothing"), Err(RefineError::NotRefined(_))));
    let stmt = tree.node(root).unwrap().stmt.clone();
    assert!(matches!(parse_law("assign z := 0", &stmt), Err(RefineError::IllTyped(_))));
    assert!(matches!(parse_law("frobnicate", &stmt), Err(RefineError::UnknownLaw(_))));
    assert!(parse_law("assign N := 0", &stmt).is_err());
    assert!(matches!(parse_law("ifelse G: x+1", &stmt), Err(RefineError::IllTyped(_))));
    tree.apply(root, RefinementLaw::Skip, &lib).unwrap();
    assert!(matches!(tree.apply(root, RefinementLaw::Skip, &lib), Err(RefineError::NodeNotOpen(_))));
    assert!(matches!(tree.to_entry("s"), Err(RefineError::NotClosed)));
}

#[test]
fn backtrack_records_history() {
    let mut tree = sqrt_tree();
    let part2 = tree.by_path("0.1").unwrap();
    let before = tree.len();
    tree.backtrack(part2, "refuted").unwrap();
    assert_eq!(tree.len(), before - 3);
    let n = tree.node(part2).unwrap();
    assert_eq!(n.history.len(), 1);
    assert!(n.history[0].proposal.starts_with("iterate"));
    assert_eq!(tree.leftmost_open(), Some(part2));
    assert_eq!(tree.record_failure(part2, "assign x", "ill-typed").unwrap(), 2);
    assert!(tree.node(tree.by_path("0.0").unwrap()).unwrap().law.is_some());
}

#[test]
fn library_save_and_call() {
    let dir = tempfile::tempdir().unwrap();
    let mut tree = sqrt_tree();
    prove_all(&mut tree);
    let entry = tree.to_entry("sqrt_approx").unwrap();
    assert_eq!(entry.provenance.len(), 6);
    let mut lib = Library::open(dir.path()).unwrap();
    lib.insert(entry.clone()).unwrap();
    assert!(matches!(lib.insert(entry.clone()), Err(RefineError::Duplicate(_))));

    let reopened = Library::open(dir.path()).unwrap();
    assert_eq!(reopened.get("sqrt_approx"), Some(&entry));

    let stmt = parse_spec_file(SQRT).unwrap().statement;
    let matches = reopened.lookup(&stmt);
    assert_eq!(matches.len(), 1);
    assert_eq!(matches[0].law.to_string(), "call sqrt_approx(N, e)");
    assert!(Library::new().lookup(&stmt).is_empty());

    let mut caller = SpecTree::new(stmt);
    let root = caller.root();
    caller.apply(root, matches[0].law.clone(), &reopened).unwrap();
    let program = caller.extract_program().unwrap();
    let text = render_program(&program);
    assert!(text.starts_with("def sqrt_approx(N: float, e: float):\n    x = 0\n"), "{text}");
    assert!(text.ends_with("sqrt_approx(N, e)\n"), "{text}");
}

proptest! {
    #[test]
    fn backtrack_undoes_apply(steps in 0usize..6, at in 0usize..6) {
        let lib = Library::new();
        let mut tree = SpecTree::new(parse_spec_file(SQRT).unwrap().statement);
        for line in &SQRT_SCRIPT[..steps] {
            apply_next(&mut tree, line, &lib);
        }
        let before = tree.clone();
        let Some(id) = tree.leftmost_open() else { return Ok(()) };
        let line = SQRT_SCRIPT[at.max(steps).min(5)];
        let Ok(law) = parse_law(line, &tree.node(id).unwrap().stmt) else { return Ok(()) };
        if tree.apply(id, law, &lib).is_err() {
            prop_assert_eq!(&tree, &before);
            return Ok(());
        }
        tree.backtrack(id, "undo").unwrap();
        prop_assert_eq!(tree.preorder(), before.preorder());
        for pid in before.preorder() {
            let (a, b) = (tree.node(pid).unwrap(), before.node(pid).unwrap());
            prop_assert_eq!(&a.stmt, &b.stmt);
            prop_assert_eq!(&a.law, &b.law);
            prop_assert_eq!(&a.children, &b.children);
        }
    }
}
