//! Law golden fixtures: a `.law` header naming the spec, optional `pre:` and
//! `post:` overrides, an optional `library:` procedure and the `law:` line,
//! then `---` and the expected step summary.

use std::path::{Path, PathBuf};

use refinery_core::refinement::{apply_law, parse_law, parse_spec_file, Library, ProcedureEntry};
use refinery_core::spec_lang::parse_spec_expr;

pub struct Golden {
    pub name: String,
    pub expected: String,
    pub got: Result<String, String>,
}

impl Golden {
    pub fn passed(&self) -> bool {
        matches!(&self.got, Ok(g) if g.trim() == self.expected.trim())
    }
}

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/laws")
}

pub fn load_all() -> Vec<Golden> {
    let dir = fixture_dir();
    let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
        .expect("law fixtures")
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "law"))
        .collect();
    files.sort();
    files.iter().map(|f| run(&dir, f)).collect()
}

fn run(dir: &Path, file: &Path) -> Golden {
    let name = file.file_stem().unwrap().to_string_lossy().into_owned();
    let text = std::fs::read_to_string(file).unwrap();
    let (head, expected) = text.split_once("\n---\n").expect("--- separator");
    let got = summarize(dir, head);
    Golden { name, expected: expected.to_string(), got }
}

fn summarize(dir: &Path, head: &str) -> Result<String, String> {
    let field = |key: &str| {
        head.lines().find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(':')).map(str::trim))
    };
    let read = |f: &str| std::fs::read_to_string(dir.join(f)).map_err(|e| format!("{f}: {e}"));
    let spec = read(field("spec").ok_or("no spec")?)?;
    let mut stmt = parse_spec_file(&spec).map_err(|e| e.to_string())?.statement;
    if let (Some(pre), Some(post)) = (field("pre"), field("post")) {
        let env = stmt.env();
        let pre = parse_spec_expr(pre, &env).map_err(|e| e.to_string())?;
        let post = parse_spec_expr(post, &env).map_err(|e| e.to_string())?;
        stmt = stmt.with(pre, post);
    }
    let mut lib = Library::new();
    if let Some(f) = field("library") {
        lib.insert(ProcedureEntry::parse(&read(f)?).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    }
    let law = parse_law(field("law").ok_or("no law")?, &stmt).map_err(|e| e.to_string())?;
    Ok(apply_law(&stmt, &law, 0, &lib).map_err(|e| e.to_string())?.summary())
}
