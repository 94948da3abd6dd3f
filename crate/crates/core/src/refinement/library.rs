//! The refinement library: verified procedures reusable through calls.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use crate::prog_lang::{parse_program, prog_expr_to_spec, render_program, spec_to_prog_expr, ProgExpr, Statement};
use crate::spec_lang::{parse_params, parse_spec_expr, render_spec_expr, type_check, SpecExpr, TypedParam};

use super::apply::apply_law;
use super::law::RefinementLaw;
use super::obligation::ProofObligation;
use super::statement::{sections, type_errors, SpecStatement};
use super::RefineError;

#[derive(Clone, Debug, PartialEq)]
pub struct ProcedureEntry {
    pub name: String,
    /// Value parameters: the constants of the refined statement.
    pub params: Vec<TypedParam>,
    /// Globals the procedure writes.
    pub frame: Vec<TypedParam>,
    pub pre: SpecExpr,
    pub post: SpecExpr,
    pub program: Statement,
    /// Script lines of the refinement that produced `program`.
    pub provenance: Vec<String>,
}

impl ProcedureEntry {
    /// Parameter bindings for a call with `args` from `stmt`.
    pub fn instantiation(
        &self,
        args: &[ProgExpr],
        stmt: &SpecStatement,
    ) -> Result<Vec<(String, SpecExpr)>, RefineError> {
        if args.len() != self.params.len() {
            return Err(RefineError::IllTyped(format!(
                "`{}` takes {} arguments, got {}",
                self.name,
                self.params.len(),
                args.len()
            )));
        }
        let mine: BTreeSet<(String, String)> =
            self.frame.iter().map(|p| (p.name.clone(), p.ty.to_string())).collect();
        let theirs: BTreeSet<(String, String)> =
            stmt.frame.iter().map(|p| (p.name.clone(), p.ty.to_string())).collect();
        if mine != theirs {
            return Err(RefineError::Mismatch(format!(
                "`{}` writes a different frame than the statement",
                self.name
            )));
        }
        let frame = stmt.frame_names();
        let env = stmt.env();
        let mut out = Vec::new();
        for (p, a) in self.params.iter().zip(args) {
            if a.names().iter().any(|n| frame.contains(n)) {
                return Err(RefineError::Mismatch("procedure arguments may not read the frame".into()));
            }
            let lifted = prog_expr_to_spec(a);
            let t = type_check(&lifted, &env).map_err(|e| RefineError::IllTyped(type_errors(&e)))?;
            if !p.ty.accepts(&t) {
                return Err(RefineError::IllTyped(format!("argument for `{}` has type {t}", p.name)));
            }
            out.push((p.name.clone(), lifted));
        }
        Ok(out)
    }

    pub fn signature(&self) -> String {
        let ps: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
        let fs: Vec<&str> = self.frame.iter().map(|p| p.name.as_str()).collect();
        format!(
            "{}({}) writes {}: [{}, {}]",
            self.name,
            ps.join(" "),
            fs.join(", "),
            render_spec_expr(&self.pre),
            render_spec_expr(&self.post)
        )
    }

    pub fn render(&self) -> String {
        let params = |ps: &[TypedParam]| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
        let indent = |text: &str| text.lines().map(|l| format!("  {l}\n")).collect::<String>();
        format!(
            "name: {}\nparams: {}\nframe: {}\npre: {}\npost: {}\nprovenance:\n{}program:\n{}",
            self.name,
            params(&self.params),
            params(&self.frame),
            render_spec_expr(&self.pre),
            render_spec_expr(&self.post),
            indent(&self.provenance.join("\n")),
            indent(&render_program(&self.program)),
        )
    }

    pub fn parse(text: &str) -> Result<ProcedureEntry, RefineError> {
        let bad = |line: usize, m: String| RefineError::Malformed(format!("library entry line {line}: {m}"));
        let mut fields: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (line, key, value) in sections(text).map_err(|e| RefineError::Malformed(e.to_string()))? {
            fields.insert(key, (line, value));
        }
        let get = |k: &str| fields.get(k).cloned().ok_or_else(|| bad(0, format!("missing `{k}`")));
        let (_, name) = get("name")?;
        let (l, params) = get("params")?;
        let params = parse_params(&params).map_err(|e| bad(l, e.to_string()))?;
        let (l, frame) = get("frame")?;
        let frame = parse_params(&frame).map_err(|e| bad(l, e.to_string()))?;
        let env: Vec<TypedParam> = params.iter().chain(&frame).cloned().collect();
        let (l, pre) = get("pre")?;
        let pre = parse_spec_expr(&pre, &env).map_err(|e| bad(l, e.to_string()))?;
        let (l, post) = get("post")?;
        let post = parse_spec_expr(&post, &env).map_err(|e| bad(l, e.to_string()))?;
        let dedent = |v: &str| v.lines().map(|l| l.strip_prefix("  ").unwrap_or(l).to_string()).collect::<Vec<_>>();
        let (l, program) = get("program")?;
        let program = parse_program(&dedent(&program).join("\n")).map_err(|e| bad(l, e.to_string()))?;
        let provenance = fields
            .get("provenance")
            .map(|(_, v)| dedent(v).into_iter().filter(|l| !l.trim().is_empty()).collect())
            .unwrap_or_default();
        Ok(ProcedureEntry { name, params, frame, pre, post, program, provenance })
    }
}

/// A call site found by [`Library::lookup`].
#[derive(Clone, Debug, PartialEq)]
pub struct LibraryMatch {
    pub entry: String,
    pub law: RefinementLaw,
    pub obligations: Vec<ProofObligation>,
}

/// Named procedures, optionally backed by a directory of `<name>.proc` files.
#[derive(Clone, Debug, Default)]
pub struct Library {
    dir: Option<PathBuf>,
    entries: BTreeMap<String, ProcedureEntry>,
}

impl Library {
    pub fn new() -> Self {
        Library::default()
    }

    /// Loads every entry in `dir`, creating it when missing.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, RefineError> {
        let dir = dir.as_ref().to_path_buf();
        let io = |e: std::io::Error| RefineError::Io(format!("{}: {e}", dir.display()));
        fs::create_dir_all(&dir).map_err(io)?;
        let mut entries = BTreeMap::new();
        let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
            .map_err(io)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "proc"))
            .collect();
        paths.sort();
        for path in paths {
            let text = fs::read_to_string(&path).map_err(io)?;
            let entry = ProcedureEntry::parse(&text)?;
            entries.insert(entry.name.clone(), entry);
        }
        Ok(Library { dir: Some(dir), entries })
    }

    pub fn get(&self, name: &str) -> Option<&ProcedureEntry> {
        self.entries.get(name)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ProcedureEntry> {
        self.entries.values()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds an entry, persisting it when the library has a directory.
    pub fn insert(&mut self, entry: ProcedureEntry) -> Result<(), RefineError> {
        if self.entries.contains_key(&entry.name) {
            return Err(RefineError::Duplicate(entry.name));
        }
        if let Some(dir) = &self.dir {
            let path = dir.join(format!("{}.proc", entry.name));
            let tmp = dir.join(format!(".{}.proc.tmp", entry.name));
            let io = |e: std::io::Error| RefineError::Io(format!("{}: {e}", path.display()));
            fs::write(&tmp, entry.render()).map_err(io)?;
            fs::rename(&tmp, &path).map_err(io)?;
        }
        self.entries.insert(entry.name.clone(), entry);
        Ok(())
    }

    /// Entries whose postcondition matches the statement's up to parameter instantiation.
    pub fn lookup(&self, stmt: &SpecStatement) -> Vec<LibraryMatch> {
        let mut out = Vec::new();
        for entry in self.entries.values() {
            let params: BTreeSet<String> = entry.params.iter().map(|p| p.name.clone()).collect();
            let mut b = BTreeMap::new();
            if !match_pattern(&entry.post, &stmt.post, &params, &mut b) {
                continue;
            }
            let mut scratch = b.clone();
            if match_pattern(&entry.pre, &stmt.pre, &params, &mut scratch) {
                b = scratch;
            }
            let args: Option<Vec<ProgExpr>> = entry
                .params
                .iter()
                .map(|p| match b.get(&p.name) {
                    Some(e) => spec_to_prog_expr(e),
                    None if stmt.lookup(&p.name).is_some() => Some(ProgExpr::name(p.name.clone())),
                    None => None,
                })
                .collect();
            let Some(args) = args else { continue };
            let law = RefinementLaw::ProcCall { name: entry.name.clone(), args };
            if let Ok(step) = apply_law(stmt, &law, 0, self) {
                out.push(LibraryMatch { entry: entry.name.clone(), law, obligations: step.obligations });
            }
        }
        out
    }
}

/// Syntactic matching of `pattern` against `target`, binding names in `params`.
pub fn match_pattern(
    pattern: &SpecExpr,
    target: &SpecExpr,
    params: &BTreeSet<String>,
    b: &mut BTreeMap<String, SpecExpr>,
) -> bool {
    if let SpecExpr::Var(n) | SpecExpr::Const(n) = pattern {
        if params.contains(n) {
            return match b.get(n) {
                Some(prev) => prev == target,
                None => {
                    b.insert(n.clone(), target.clone());
                    true
                }
            };
        }
    }
    let shell = |e: &SpecExpr| e.map_children(|_| SpecExpr::Bool(true));
    if shell(pattern) != shell(target) {
        return false;
    }
    let mut ps = Vec::new();
    pattern.for_each_child(|c| ps.push(c));
    let mut ts = Vec::new();
    target.for_each_child(|c| ts.push(c));
    ps.len() == ts.len() && ps.into_iter().zip(ts).all(|(p, t)| match_pattern(p, t, params, b))
}
