use std::fmt::Write;

use crate::refinement::LAW_CATALOG;
use crate::spec_lang::render_spec_expr;

use super::OracleContext;

fn params(ps: &[crate::spec_lang::TypedParam]) -> String {
    if ps.is_empty() {
        "(none)".into()
    } else {
        ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" ")
    }
}

/// The prompt for one node. Depends on nothing but `ctx`.
pub fn build_prompt(ctx: &OracleContext) -> String {
    let s = &ctx.statement;
    let mut out = String::new();
    out.push_str(
        "Refine the specification statement below by choosing exactly one refinement law \
         and its parameters.\n\n",
    );
    out.push_str("Laws:\n");
    for law in LAW_CATALOG {
        let _ = writeln!(out, "- {}\n    syntax: {}\n    scheme: {}", law.keyword, law.syntax, law.scheme);
    }
    out.push_str("\nStatement:\n");
    let _ = writeln!(out, "  node: {}", ctx.path);
    let _ = writeln!(out, "  constants: {}", params(&s.constants));
    let _ = writeln!(out, "  variants: {}", params(&s.frame));
    let _ = writeln!(out, "  pre: {}", render_spec_expr(&s.pre));
    let _ = writeln!(out, "  post: {}", render_spec_expr(&s.post));
    if !s.context.is_empty() {
        let facts: Vec<String> = s.context.iter().map(render_spec_expr).collect();
        let _ = writeln!(out, "  facts about constants: {}", facts.join(" /\\ "));
    }
    if !ctx.history.is_empty() {
        out.push_str("\nPrevious failures at this node, oldest first:\n");
        for (k, f) in ctx.history.iter().enumerate() {
            let _ = writeln!(out, "  {}. proposal: {}\n     reason: {}", k + 1, f.proposal, f.reason);
        }
    }
    if !ctx.hints.is_empty() {
        out.push_str("\nLibrary procedures matching this statement:\n");
        for h in &ctx.hints {
            let _ = writeln!(out, "  - {}\n    use: {}", h.signature, h.call);
        }
    }
    let _ = writeln!(out, "\nAttempts left at this node: {}", ctx.remaining);
    out.push_str(
        "\nReply with a single line in the syntax of one law above, for example\n\
         `assign x := 0, y := N+1` or `ifelse G: x < y`. Write conjunction as /\\, \
         disjunction as \\/, negation as ~ and initial values as x_0. \
         Put nothing else on that line.\n",
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refinement::{parse_spec_file, Failure};

    fn ctx() -> OracleContext {
        let f = parse_spec_file(
            "name: sqrt\nconstants: (N:float) (e:float)\nvariants: (x:float) (y:float)\n\
             pre: N >= 0 /\\ e > 0\npost: x*x <= N < y*y /\\ y <= x+e\n",
        )
        .unwrap();
        OracleContext::new(f.statement, "0")
    }

    #[test]
    fn fresh_root() {
        let p = build_prompt(&ctx());
        assert!(p.contains("pre: N >= 0 /\\ e > 0"));
        assert!(p.contains("post: x*x <= N /\\ N < y*y /\\ y <= x+e"));
        for kw in ["skip", "seq", "assign", "ifelse", "iterate", "traverse"] {
            assert!(p.contains(&format!("- {kw}\n")), "{kw}");
        }
        assert!(!p.contains("Previous failures"));
        assert_eq!(p, build_prompt(&ctx()));
    }

    #[test]
    fn failures_are_listed_verbatim() {
        let mut c = ctx();
        c.history.push(Failure {
            proposal: "assign x := 0, y := N".into(),
            reason: "[assign] refuted by smt; counterexample: N = 1/2, e = 1/2".into(),
        });
        let p = build_prompt(&c);
        assert!(p.contains("Previous failures"));
        assert!(p.contains("counterexample: N = 1/2, e = 1/2"));
    }
}
