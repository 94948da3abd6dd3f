use std::collections::BTreeSet;
use std::fmt;

use crate::spec_lang::{
    instantiate, parse_params, parse_spec_expr, render_spec_expr, type_check, SpecExpr, SpecType,
    TypedParam,
};

use super::RefineError;

/// A specification statement `w: [pre, post]`.
///
/// `constants` are the names the statement may read but not change.
/// `context` holds facts about constants taken from the root precondition;
/// constants never change, so these facts hold in every state of the
/// derivation and are available to every obligation below the root.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecStatement {
    pub frame: Vec<TypedParam>,
    pub constants: Vec<TypedParam>,
    pub pre: SpecExpr,
    pub post: SpecExpr,
    pub context: Vec<SpecExpr>,
    /// Predicates script formulas may use; inlined when a law is parsed.
    pub definitions: Vec<Definition>,
}

impl SpecStatement {
    /// Root statement; its context is every conjunct of `pre` over constants only.
    pub fn new(
        frame: Vec<TypedParam>,
        constants: Vec<TypedParam>,
        pre: SpecExpr,
        post: SpecExpr,
    ) -> Result<Self, RefineError> {
        let names: BTreeSet<String> = constants.iter().map(|p| p.name.clone()).collect();
        let context = pre
            .conjuncts()
            .into_iter()
            .filter(|c| !c.contains_init() && c.free_vars().is_subset(&names))
            .cloned()
            .collect();
        let s = SpecStatement { frame, constants, pre, post, context, definitions: Vec::new() };
        s.validate()?;
        Ok(s)
    }

    /// Every readable name: constants first, then the frame.
    pub fn env(&self) -> Vec<TypedParam> {
        self.constants.iter().chain(&self.frame).cloned().collect()
    }

    pub fn lookup(&self, name: &str) -> Option<&TypedParam> {
        self.frame.iter().chain(&self.constants).find(|p| p.name == name)
    }

    pub fn in_frame(&self, name: &str) -> bool {
        self.frame.iter().any(|p| p.name == name)
    }

    pub fn frame_names(&self) -> BTreeSet<String> {
        self.frame.iter().map(|p| p.name.clone()).collect()
    }

    /// Same frame, constants and context with a new pre and post.
    pub fn with(&self, pre: SpecExpr, post: SpecExpr) -> Self {
        SpecStatement { pre, post, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), RefineError> {
        let mut seen = BTreeSet::new();
        for p in self.frame.iter().chain(&self.constants) {
            if !seen.insert(p.name.clone()) {
                return Err(RefineError::Mismatch(format!("`{}` is declared twice", p.name)));
            }
        }
        if self.pre.contains_init() {
            return Err(RefineError::Mismatch("the precondition may not mention initial values".into()));
        }
        let env = self.env();
        for (what, e) in [("precondition", &self.pre), ("postcondition", &self.post)] {
            for n in e.free_vars() {
                if self.lookup(&n).is_none() {
                    return Err(RefineError::IllTyped(format!("{what} mentions undeclared `{n}`")));
                }
            }
            match type_check(e, &env) {
                Ok(SpecType::Bool) => {}
                Ok(t) => return Err(RefineError::IllTyped(format!("{what} has type {t}, not bool"))),
                Err(errs) => return Err(RefineError::IllTyped(type_errors(&errs))),
            }
        }
        Ok(())
    }

    pub fn render(&self) -> String {
        let names: Vec<&str> = self.frame.iter().map(|p| p.name.as_str()).collect();
        format!("{}: [{}, {}]", names.join(", "), render_spec_expr(&self.pre), render_spec_expr(&self.post))
    }
}

impl fmt::Display for SpecStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

pub(crate) fn type_errors(errs: &[crate::spec_lang::TypeError]) -> String {
    errs.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

/// A named predicate definition `name(params) := body`, inlined at load time.
#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<TypedParam>,
    pub body: SpecExpr,
}

/// A parsed specification file.
#[derive(Clone, Debug, PartialEq)]
pub struct SpecFile {
    pub name: String,
    pub definitions: Vec<Definition>,
    pub statement: SpecStatement,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("spec file line {line}: {message}")]
pub struct SpecFileError {
    pub line: usize,
    pub message: String,
}

/// Replaces applications of defined predicates by their instantiated bodies.
pub fn inline_definitions(e: &SpecExpr, defs: &[Definition]) -> SpecExpr {
    match e {
        SpecExpr::App(name, args) => {
            let args: Vec<SpecExpr> = args.iter().map(|a| inline_definitions(a, defs)).collect();
            match defs.iter().find(|d| &d.name == name && d.params.len() == args.len()) {
                Some(d) => {
                    let bindings: Vec<(String, SpecExpr)> =
                        d.params.iter().map(|p| p.name.clone()).zip(args).collect();
                    instantiate(&d.body, &bindings)
                }
                None => SpecExpr::App(name.clone(), args),
            }
        }
        _ => e.map_children(|c| inline_definitions(c, defs)),
    }
}

/// Splits `key: value` sections; indented lines continue the previous value.
pub(crate) fn sections(text: &str) -> Result<Vec<(usize, String, String)>, SpecFileError> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
            continue;
        }
        if raw.starts_with(' ') || raw.starts_with('\t') {
            match out.last_mut() {
                Some((_, _, value)) => {
                    if !value.is_empty() {
                        value.push('\n');
                    }
                    value.push_str(raw);
                }
                None => return Err(SpecFileError { line, message: "continuation without a section".into() }),
            }
            continue;
        }
        let Some((key, value)) = raw.split_once(':') else {
            return Err(SpecFileError { line, message: format!("expected `key: value`, got `{raw}`") });
        };
        out.push((line, key.trim().to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn one_line(v: &str) -> String {
    v.lines().map(str::trim).collect::<Vec<_>>().join(" ")
}

pub fn parse_spec_file(text: &str) -> Result<SpecFile, SpecFileError> {
    let mut name = None;
    let mut constants = Vec::new();
    let mut frame = Vec::new();
    let mut pre = None;
    let mut post = None;
    let mut defs: Vec<Definition> = Vec::new();
    for (line, key, value) in sections(text)? {
        let err = |message: String| SpecFileError { line, message };
        let value = one_line(&value);
        match key.as_str() {
            "name" => name = Some(value),
            "constants" => constants = parse_params(&value).map_err(|e| err(e.to_string()))?,
            "variants" => frame = parse_params(&value).map_err(|e| err(e.to_string()))?,
            "define" => {
                let (head, body) = value
                    .split_once(":=")
                    .ok_or_else(|| err("expected `name (p:T) ... := formula`".into()))?;
                let head = head.trim();
                let split = head.find(|c: char| c.is_whitespace() || c == '(').unwrap_or(head.len());
                let (dname, params) = head.split_at(split);
                let params = parse_params(params).map_err(|e| err(e.to_string()))?;
                let mut env = params.clone();
                env.extend(constants.iter().cloned());
                let body = parse_spec_expr(body.trim(), &env).map_err(|e| err(e.to_string()))?;
                let body = inline_definitions(&body, &defs);
                defs.push(Definition { name: dname.to_string(), params, body });
            }
            "pre" | "post" => {
                let env: Vec<TypedParam> = constants.iter().chain(&frame).cloned().collect();
                let e = parse_spec_expr(&value, &env).map_err(|e| err(e.to_string()))?;
                let e = inline_definitions(&e, &defs);
                if key == "pre" {
                    pre = Some(e);
                } else {
                    post = Some(e);
                }
            }
            other => return Err(err(format!("unknown section `{other}`"))),
        }
    }
    let missing = |what: &str| SpecFileError { line: 0, message: format!("missing `{what}:` section") };
    let name = name.ok_or_else(|| missing("name"))?;
    let pre = pre.ok_or_else(|| missing("pre"))?;
    let post = post.ok_or_else(|| missing("post"))?;
    if frame.is_empty() {
        return Err(missing("variants"));
    }
    let mut statement = SpecStatement::new(frame, constants, pre, post)
        .map_err(|e| SpecFileError { line: 0, message: e.to_string() })?;
    statement.definitions = defs.clone();
    Ok(SpecFile { name, definitions: defs, statement })
}

pub fn render_spec_file(f: &SpecFile) -> String {
    let params = |ps: &[TypedParam]| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ");
    let defs: String = f
        .definitions
        .iter()
        .map(|d| format!("define: {} {} := {}\n", d.name, params(&d.params), render_spec_expr(&d.body)))
        .collect();
    format!(
        "name: {}\nconstants: {}\nvariants: {}\n{defs}pre: {}\npost: {}\n",
        f.name,
        params(&f.statement.constants),
        params(&f.statement.frame),
        render_spec_expr(&f.statement.pre),
        render_spec_expr(&f.statement.post),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT: &str = "\
name: sqrt
constants: (N:float) (e:float)
variants: (x:float) (y:float)
pre: N >= 0 /\\ e > 0
post: x*x <= N < y*y /\\ y <= x+e
";

    #[test]
    fn sqrt_file() {
        let f = parse_spec_file(SQRT).unwrap();
        assert_eq!(f.statement.render(), "x, y: [N >= 0 /\\ e > 0, x*x <= N /\\ N < y*y /\\ y <= x+e]");
        assert_eq!(f.statement.context.len(), 2);
        assert_eq!(parse_spec_file(&render_spec_file(&f)).unwrap(), f);
    }

    #[test]
    fn definitions_inline() {
        let text = "name: d\nconstants: (A:nat) (B:nat)\nvariants: (r:bool)\n\
                    define: divides (d:nat) (n:nat) := exists (k:nat), n = d*k\n\
                    pre: B > 0\npost: r = true -> divides(B, A)\n";
        let f = parse_spec_file(text).unwrap();
        assert_eq!(
            render_spec_expr(&f.statement.post),
            "r = true -> (exists (k:nat), A = B*k)"
        );
    }

    #[test]
    fn missing_and_unknown_sections() {
        assert!(parse_spec_file("name: x\n").is_err());
        assert!(parse_spec_file("colour: red\n").is_err());
        let e = parse_spec_file("name: x\nvariants: (x:int)\npre: true\npost: z = 1\n").unwrap_err();
        assert_eq!(e.line, 4);
    }
}
