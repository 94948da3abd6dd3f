//! Law catalog and the refinement-script line syntax.

use std::fmt;

use crate::prog_lang::{
    parse_prog_expr, prog_expr_to_spec, render_prog_expr, spec_to_prog_expr, ProgExpr, Target,
};
use crate::spec_lang::{
    parse_spec_expr, parse_spec_type, render_spec_expr, type_check, SpecExpr, SpecType, TypedParam,
};

use super::statement::{inline_definitions, type_errors, Definition, SpecStatement};
use super::RefineError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum IterMode {
    Initialised,
    Flexible,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RefinementLaw {
    Skip,
    InitSkip,
    Seq { mid: SpecExpr },
    FlexSeq { a: SpecExpr, b: SpecExpr, c: SpecExpr, d: SpecExpr },
    Assign { bindings: Vec<(Target, ProgExpr)> },
    FollowAssign { bindings: Vec<(Target, ProgExpr)> },
    IfElse { guard: ProgExpr },
    Iterate { inv: SpecExpr, guard: ProgExpr, variant: SpecExpr, mode: IterMode },
    /// `inv` is the invariant at index `index`; the loop runs it from `lo` to `hi`.
    Traverse { array: String, index: String, lo: SpecExpr, hi: SpecExpr, inv: SpecExpr },
    Expand { var: TypedParam, init: SpecExpr },
    ProcCall { name: String, args: Vec<ProgExpr> },
}

impl RefinementLaw {
    pub fn keyword(&self) -> &'static str {
        match self {
            RefinementLaw::Skip => "skip",
            RefinementLaw::InitSkip => "initskip",
            RefinementLaw::Seq { .. } => "seq",
            RefinementLaw::FlexSeq { .. } => "flexseq",
            RefinementLaw::Assign { .. } => "assign",
            RefinementLaw::FollowAssign { .. } => "followassign",
            RefinementLaw::IfElse { .. } => "ifelse",
            RefinementLaw::Iterate { .. } => "iterate",
            RefinementLaw::Traverse { .. } => "traverse",
            RefinementLaw::Expand { .. } => "expand",
            RefinementLaw::ProcCall { .. } => "call",
        }
    }
}

/// One catalog row: script keyword, line syntax and the proviso it generates.
pub struct LawDescription {
    pub keyword: &'static str,
    pub syntax: &'static str,
    pub scheme: &'static str,
}

pub const LAW_CATALOG: &[LawDescription] = &[
    LawDescription {
        keyword: "skip",
        syntax: "skip",
        scheme: "w: [P, Q] refined by pass; verify (w = w_0) /\\ P -> Q",
    },
    LawDescription {
        keyword: "initskip",
        syntax: "initskip",
        scheme: "w: [P, Q] refined by pass; verify (w = w_0) /\\ P -> Q",
    },
    LawDescription {
        keyword: "seq",
        syntax: "seq mid: <formula>",
        scheme: "w: [P, Q] refined by w: [P, M]; w: [M, Q]",
    },
    LawDescription {
        keyword: "flexseq",
        syntax: "flexseq A: <formula> B: <formula> C: <formula> D: <formula>",
        scheme: "w: [P, Q] refined by w: [A, B]; w: [C, D]; verify P -> A, B -> C, D -> Q",
    },
    LawDescription {
        keyword: "assign",
        syntax: "assign x := <expr>, a[i] := <expr>",
        scheme: "w: [P, Q] refined by x = E; verify P -> Q<x := E>",
    },
    LawDescription {
        keyword: "followassign",
        syntax: "followassign x := <expr>",
        scheme: "w: [P, Q] refined by w: [P, Q<x := E>]; x = E",
    },
    LawDescription {
        keyword: "ifelse",
        syntax: "ifelse G: <expr>",
        scheme: "w: [P, Q] refined by if G: w: [P /\\ G, Q] else: w: [P /\\ ~G, Q]",
    },
    LawDescription {
        keyword: "iterate",
        syntax: "iterate I: <formula> G: <expr> V: <formula> mode: initialised|flexible",
        scheme: "w: [P, Q] refined by w: [P, I]; while G: w: [I /\\ G, I /\\ 0 <= V /\\ V < V_0]; \
                 verify I /\\ ~G -> Q (flexible: body post I /\\ V < V_0 and assert V != V_0)",
    },
    LawDescription {
        keyword: "traverse",
        syntax: "traverse <array> <index> m: <term> n: <term> P: <formula over index>",
        scheme: "l: [pre, Q] refined by l: [pre, P(m)]; i = m; while i < n: l: [P(i) /\\ m <= i < n, P(i+1)]; \
                 i = i+1; verify pre -> m <= n, P(n) -> Q",
    },
    LawDescription {
        keyword: "expand",
        syntax: "expand (y:T) init: <term>",
        scheme: "w: [P, Q] refined by w, y: [P, Q /\\ y = y_0]",
    },
    LawDescription {
        keyword: "call",
        syntax: "call <procedure>(<expr>, ...)",
        scheme: "w: [P, Q] refined by Proc(A); verify P -> pre<f := A>, post<f := A> -> Q",
    },
];

fn render_bindings(bindings: &[(Target, ProgExpr)]) -> String {
    bindings
        .iter()
        .map(|(t, e)| {
            let t = match t {
                Target::Name(n) => n.clone(),
                Target::Index(n, i) => format!("{n}[{}]", render_prog_expr(i)),
            };
            format!("{t} := {}", render_prog_expr(e))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// The script line for `law`; [`parse_law`] reads it back.
pub fn render_law(law: &RefinementLaw) -> String {
    let f = render_spec_expr;
    let g = render_prog_expr;
    match law {
        RefinementLaw::Skip => "skip".into(),
        RefinementLaw::InitSkip => "initskip".into(),
        RefinementLaw::Seq { mid } => format!("seq mid: {}", f(mid)),
        RefinementLaw::FlexSeq { a, b, c, d } => {
            format!("flexseq A: {} B: {} C: {} D: {}", f(a), f(b), f(c), f(d))
        }
        RefinementLaw::Assign { bindings } => format!("assign {}", render_bindings(bindings)),
        RefinementLaw::FollowAssign { bindings } => format!("followassign {}", render_bindings(bindings)),
        RefinementLaw::IfElse { guard } => format!("ifelse G: {}", g(guard)),
        RefinementLaw::Iterate { inv, guard, variant, mode } => format!(
            "iterate I: {} G: {} V: {} mode: {}",
            f(inv),
            g(guard),
            f(variant),
            match mode {
                IterMode::Initialised => "initialised",
                IterMode::Flexible => "flexible",
            }
        ),
        RefinementLaw::Traverse { array, index, lo, hi, inv } => {
            format!("traverse {array} {index} m: {} n: {} P: {}", f(lo), f(hi), f(inv))
        }
        RefinementLaw::Expand { var, init } => format!("expand {var} init: {}", f(init)),
        RefinementLaw::ProcCall { name, args } => {
            format!("call {name}({})", args.iter().map(g).collect::<Vec<_>>().join(", "))
        }
    }
}

impl fmt::Display for RefinementLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_law(self))
    }
}

/// Splits `text` at the keys ` K:` in order. Keys marked optional may be absent.
fn split_keys<'a>(text: &'a str, keys: &[(&str, bool)]) -> Result<Vec<Option<&'a str>>, RefineError> {
    let mut starts = Vec::new();
    let mut cursor = 0;
    for (key, optional) in keys {
        let pat = format!("{key}:");
        let found = text[cursor..].match_indices(&pat).map(|(i, _)| cursor + i).find(|&i| {
            i == 0 || text[..i].ends_with(char::is_whitespace)
        });
        match found {
            Some(i) => {
                starts.push(Some((i, i + pat.len())));
                cursor = i + pat.len();
            }
            None if *optional => starts.push(None),
            None => return Err(RefineError::Malformed(format!("missing `{key}:`"))),
        }
    }
    if let Some(Some((first, _))) = starts.iter().find(|s| s.is_some()) {
        if !text[..*first].trim().is_empty() {
            return Err(RefineError::Malformed(format!("unexpected `{}`", text[..*first].trim())));
        }
    }
    let mut out = Vec::new();
    for (k, s) in starts.iter().enumerate() {
        let Some((_, begin)) = s else {
            out.push(None);
            continue;
        };
        let end = starts[k + 1..].iter().flatten().map(|(b, _)| *b).next().unwrap_or(text.len());
        out.push(Some(text[*begin..end].trim()));
    }
    Ok(out)
}

fn formula(text: &str, env: &[TypedParam], defs: &[Definition]) -> Result<SpecExpr, RefineError> {
    let e = parse_spec_expr(text, env).map_err(|e| RefineError::IllTyped(format!("`{text}`: {e}")))?;
    let e = inline_definitions(&e, defs);
    match e.undefined_predicate() {
        Some(name) => Err(RefineError::IllTyped(format!("`{text}`: undefined predicate `{name}`"))),
        None => Ok(e),
    }
}

fn prog(text: &str) -> Result<ProgExpr, RefineError> {
    parse_prog_expr(text).map_err(|e| RefineError::Malformed(format!("`{text}`: {e}")))
}

fn split_commas(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '(' | '[' => depth += 1,
            ')' | ']' => depth -= 1,
            ',' if depth == 0 => {
                out.push(text[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    if !text[start..].trim().is_empty() {
        out.push(text[start..].trim());
    }
    out
}

fn parse_bindings(text: &str) -> Result<Vec<(Target, ProgExpr)>, RefineError> {
    let mut out = Vec::new();
    for part in split_commas(text) {
        let (lhs, rhs) = part
            .split_once(":=")
            .ok_or_else(|| RefineError::Malformed(format!("expected `x := expr`, got `{part}`")))?;
        let target = match prog(lhs.trim())? {
            ProgExpr::Name(n) => Target::Name(n),
            ProgExpr::Index(n, i) => Target::Index(n, *i),
            _ => return Err(RefineError::Malformed(format!("`{}` is not assignable", lhs.trim()))),
        };
        out.push((target, prog(rhs.trim())?));
    }
    if out.is_empty() {
        return Err(RefineError::Malformed("no assignments given".into()));
    }
    Ok(out)
}

/// Parses one script line against the statement it will refine.
pub fn parse_law(line: &str, stmt: &SpecStatement) -> Result<RefinementLaw, RefineError> {
    let line = line.trim();
    let (word, rest) = match line.find(char::is_whitespace) {
        Some(i) => (&line[..i], line[i..].trim()),
        None => (line, ""),
    };
    let env = stmt.env();
    let law = match word.to_ascii_lowercase().as_str() {
        "skip" | "initskip" if !rest.is_empty() => {
            return Err(RefineError::Malformed(format!("`{word}` takes no parameters")))
        }
        "skip" => RefinementLaw::Skip,
        "initskip" => RefinementLaw::InitSkip,
        "seq" => {
            let p = split_keys(rest, &[("mid", false)])?;
            RefinementLaw::Seq { mid: formula(p[0].unwrap(), &env, &stmt.definitions)? }
        }
        "flexseq" => {
            let p = split_keys(rest, &[("A", false), ("B", false), ("C", false), ("D", false)])?;
            RefinementLaw::FlexSeq {
                a: formula(p[0].unwrap(), &env, &stmt.definitions)?,
                b: formula(p[1].unwrap(), &env, &stmt.definitions)?,
                c: formula(p[2].unwrap(), &env, &stmt.definitions)?,
                d: formula(p[3].unwrap(), &env, &stmt.definitions)?,
            }
        }
        "assign" => RefinementLaw::Assign { bindings: parse_bindings(rest)? },
        "followassign" => RefinementLaw::FollowAssign { bindings: parse_bindings(rest)? },
        "ifelse" => {
            let p = split_keys(rest, &[("G", false)])?;
            RefinementLaw::IfElse { guard: prog(p[0].unwrap())? }
        }
        "iterate" => {
            let p = split_keys(rest, &[("I", false), ("G", false), ("V", false), ("mode", true)])?;
            let mode = match p[3].map(str::to_ascii_lowercase).as_deref() {
                None | Some("initialised") | Some("initialized") => IterMode::Initialised,
                Some("flexible") => IterMode::Flexible,
                Some(other) => return Err(RefineError::Malformed(format!("unknown mode `{other}`"))),
            };
            RefinementLaw::Iterate {
                inv: formula(p[0].unwrap(), &env, &stmt.definitions)?,
                guard: prog(p[1].unwrap())?,
                variant: formula(p[2].unwrap(), &env, &stmt.definitions)?,
                mode,
            }
        }
        "traverse" => {
            let m_at = rest
                .find("m:")
                .ok_or_else(|| RefineError::Malformed("missing `m:`".into()))?;
            let names: Vec<&str> = rest[..m_at].split_whitespace().collect();
            let [array, index] = names[..] else {
                return Err(RefineError::Malformed("expected `traverse <array> <index> m: ...`".into()));
            };
            let p = split_keys(&rest[m_at..], &[("m", false), ("n", false), ("P", false)])?;
            let mut inv_env = env.clone();
            if stmt.lookup(index).is_none() {
                inv_env.push(TypedParam::new(index, SpecType::Nat));
            }
            RefinementLaw::Traverse {
                array: array.to_string(),
                index: index.to_string(),
                lo: formula(p[0].unwrap(), &env, &stmt.definitions)?,
                hi: formula(p[1].unwrap(), &env, &stmt.definitions)?,
                inv: formula(p[2].unwrap(), &inv_env, &stmt.definitions)?,
            }
        }
        "expand" => {
            let (decl, init) = match rest.find("init:") {
                Some(i) => (rest[..i].trim(), Some(rest[i + 5..].trim())),
                None => (rest, None),
            };
            let inner = decl
                .strip_prefix('(')
                .and_then(|d| d.strip_suffix(')'))
                .ok_or_else(|| RefineError::Malformed("expected `expand (y:T)`".into()))?;
            let (name, ty) = inner
                .split_once(':')
                .ok_or_else(|| RefineError::Malformed("expected `expand (y:T)`".into()))?;
            let ty = parse_spec_type(ty.trim()).map_err(|e| RefineError::Malformed(e.to_string()))?;
            let var = TypedParam::new(name.trim(), ty);
            let mut inner_env = env.clone();
            inner_env.push(var.clone());
            let init = match init {
                Some(t) => formula(t, &inner_env, &stmt.definitions)?,
                None => SpecExpr::init_of(var.name.clone()),
            };
            RefinementLaw::Expand { var, init }
        }
        "call" => {
            let open = rest.find('(').ok_or_else(|| RefineError::Malformed("expected `call name(args)`".into()))?;
            let body = rest[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| RefineError::Malformed("expected `)`".into()))?;
            let args = split_commas(body).into_iter().map(prog).collect::<Result<_, _>>()?;
            RefinementLaw::ProcCall { name: rest[..open].trim().to_string(), args }
        }
        other => return Err(RefineError::UnknownLaw(other.to_string())),
    };
    check_law(&law, stmt)?;
    Ok(law)
}

fn expect_type(e: &SpecExpr, env: &[TypedParam], want: &SpecType, what: &str) -> Result<SpecType, RefineError> {
    let t = type_check(e, env).map_err(|errs| RefineError::IllTyped(type_errors(&errs)))?;
    if want.accepts(&t) {
        Ok(t)
    } else {
        Err(RefineError::IllTyped(format!("{what} `{}` has type {t}, expected {want}", render_spec_expr(e))))
    }
}

fn check_prog(e: &ProgExpr, stmt: &SpecStatement, want: &SpecType, what: &str) -> Result<(), RefineError> {
    for n in e.names() {
        if stmt.lookup(&n).is_none() {
            return Err(RefineError::IllTyped(format!("{what} reads undeclared `{n}`")));
        }
    }
    expect_type(&prog_expr_to_spec(e), &stmt.env(), want, what).map(|_| ())
}

fn no_init(e: &SpecExpr, what: &str) -> Result<(), RefineError> {
    if e.contains_init() {
        Err(RefineError::Mismatch(format!("{what} may not mention initial values")))
    } else {
        Ok(())
    }
}

/// Checks the law's parameters against the statement.
pub fn check_law(law: &RefinementLaw, stmt: &SpecStatement) -> Result<(), RefineError> {
    let env = stmt.env();
    let bool_ty = SpecType::Bool;
    match law {
        RefinementLaw::Skip | RefinementLaw::InitSkip => Ok(()),
        RefinementLaw::Seq { mid } => {
            no_init(&stmt.post, "a postcondition split by sequential composition")?;
            no_init(mid, "the middle formula")?;
            expect_type(mid, &env, &bool_ty, "mid").map(|_| ())
        }
        RefinementLaw::FlexSeq { a, b, c, d } => {
            no_init(&stmt.post, "a postcondition split by sequential composition")?;
            for (name, f) in [("A", a), ("B", b), ("C", c), ("D", d)] {
                no_init(f, name)?;
                expect_type(f, &env, &bool_ty, name)?;
            }
            Ok(())
        }
        RefinementLaw::Assign { bindings } | RefinementLaw::FollowAssign { bindings } => {
            let mut seen = Vec::new();
            for (target, value) in bindings {
                let base = target.base();
                let Some(p) = stmt.frame.iter().find(|p| p.name == base) else {
                    return Err(RefineError::IllTyped(format!("`{base}` is not in the frame")));
                };
                if seen.contains(&base) {
                    return Err(RefineError::IllTyped(format!("`{base}` is assigned twice")));
                }
                seen.push(base);
                let want = match target {
                    Target::Name(_) => p.ty.clone(),
                    Target::Index(_, i) => {
                        check_prog(i, stmt, &SpecType::Int, "index")?;
                        p.ty.element()
                            .cloned()
                            .ok_or_else(|| RefineError::IllTyped(format!("`{base}` is not an array")))?
                    }
                };
                check_prog(value, stmt, &want, &format!("value for `{base}`"))?;
            }
            Ok(())
        }
        RefinementLaw::IfElse { guard } => check_prog(guard, stmt, &bool_ty, "guard"),
        RefinementLaw::Iterate { inv, guard, variant, mode } => {
            no_init(&stmt.post, "an iterated postcondition")?;
            no_init(inv, "the invariant")?;
            no_init(variant, "the variant")?;
            expect_type(inv, &env, &bool_ty, "invariant")?;
            check_prog(guard, stmt, &bool_ty, "guard")?;
            expect_type(variant, &env, &SpecType::Float, "variant")?;
            if *mode == IterMode::Flexible && spec_to_prog_expr(variant).is_none() {
                return Err(RefineError::Mismatch("a flexible variant must be a program expression".into()));
            }
            Ok(())
        }
        RefinementLaw::Traverse { array, index, lo, hi, inv } => {
            no_init(&stmt.post, "a traversed postcondition")?;
            no_init(inv, "the traverse formula")?;
            match stmt.frame.iter().find(|p| &p.name == array) {
                Some(p) if matches!(p.ty, SpecType::Array(_)) => {}
                _ => return Err(RefineError::Mismatch(format!("`{array}` is not an array in the frame"))),
            }
            if stmt.constants.iter().any(|p| &p.name == index) {
                return Err(RefineError::Mismatch(format!("index `{index}` is a constant")));
            }
            if let Some(p) = stmt.frame.iter().find(|p| &p.name == index) {
                if !p.ty.is_integral() {
                    return Err(RefineError::IllTyped(format!("index `{index}` is not integral")));
                }
            }
            let frame = stmt.frame_names();
            for (what, bound) in [("m", lo), ("n", hi)] {
                expect_type(bound, &env, &SpecType::Int, what)?;
                if bound.free_vars().iter().any(|n| frame.contains(n) || n == index) {
                    return Err(RefineError::Mismatch(format!("bound {what} may only mention constants")));
                }
                if spec_to_prog_expr(bound).is_none() {
                    return Err(RefineError::Mismatch(format!("bound {what} must be a program expression")));
                }
            }
            let mut inv_env = env.clone();
            if stmt.lookup(index).is_none() {
                inv_env.push(TypedParam::new(index.clone(), SpecType::Nat));
            }
            expect_type(inv, &inv_env, &bool_ty, "P").map(|_| ())
        }
        RefinementLaw::Expand { var, init } => {
            if stmt.lookup(&var.name).is_some() {
                return Err(RefineError::Mismatch(format!("`{}` is already declared", var.name)));
            }
            let mut inner = env.clone();
            inner.push(var.clone());
            expect_type(init, &inner, &var.ty, "initial value").map(|_| ())
        }
        RefinementLaw::ProcCall { args, .. } => {
            for a in args {
                for n in a.names() {
                    if stmt.lookup(&n).is_none() {
                        return Err(RefineError::IllTyped(format!("argument reads undeclared `{n}`")));
                    }
                }
                type_check(&prog_expr_to_spec(a), &env)
                    .map_err(|errs| RefineError::IllTyped(type_errors(&errs)))?;
            }
            Ok(())
        }
    }
}
