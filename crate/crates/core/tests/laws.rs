//! Pinned child statements, code and obligations for every law.

#[path = "support/golden.rs"]
mod golden;

#[test]
fn law_goldens() {
    let all = golden::load_all();
    assert!(all.len() >= 15);
    let mut failed = Vec::new();
    for g in &all {
        if !g.passed() {
            eprintln!("--- {} ---\nexpected:\n{}\ngot:\n{:?}", g.name, g.expected, g.got);
            failed.push(g.name.as_str());
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}

#[test]
fn every_law_keyword_has_a_golden() {
    let dir = golden::fixture_dir();
    let mut laws = String::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "law") {
            laws += &std::fs::read_to_string(p).unwrap();
        }
    }
    for l in refinery_core::refinement::LAW_CATALOG {
        assert!(laws.contains(&format!("law: {}", l.keyword)), "{}", l.keyword);
    }
}
