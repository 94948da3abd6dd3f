//! Per-law schemes: child statements, emitted code and proof obligations.

use std::collections::BTreeSet;

use crate::prog_lang::{prog_expr_to_spec, spec_to_prog_expr, ProgExpr, Statement, Target};
use crate::spec_lang::{
    fresh_name, instantiate, substitute, ArithOp, RelOp, SpecExpr, SpecType, TypedParam,
};

use super::code::CodeTemplate;
use super::law::{check_law, render_law, IterMode, RefinementLaw};
use super::library::{Library, ProcedureEntry};
use super::obligation::{ObligationStatus, ProofObligation};
use super::statement::SpecStatement;
use super::RefineError;

/// Result of applying one law to one statement.
#[derive(Clone, Debug, PartialEq)]
pub struct RefinementStep {
    pub children: Vec<SpecStatement>,
    pub code: CodeTemplate,
    pub obligations: Vec<ProofObligation>,
    pub procedure: Option<ProcedureEntry>,
}

impl RefinementStep {
    /// Children with their constants, the code template, then each obligation.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.children {
            let consts: Vec<&str> = c.constants.iter().map(|p| p.name.as_str()).collect();
            out += &format!("child {} | {}\n", c, consts.join(" "));
        }
        out += &self.code.render();
        for o in &self.obligations {
            out += &format!("{o}\n");
        }
        out
    }
}

/// `x = x_0` for each name.
fn snapshot_equations<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<SpecExpr> {
    names
        .into_iter()
        .map(|n| SpecExpr::rel(RelOp::Eq, SpecExpr::name(n), SpecExpr::init_of(n)))
        .collect()
}

/// Negation that flips a relation instead of wrapping it.
pub fn negate(e: &SpecExpr) -> SpecExpr {
    match e {
        SpecExpr::Rel(op, a, b) => SpecExpr::Rel(op.negate(), a.clone(), b.clone()),
        SpecExpr::Not(inner) => (**inner).clone(),
        SpecExpr::Bool(b) => SpecExpr::Bool(!b),
        other => SpecExpr::not(other.clone()),
    }
}

fn and(items: impl IntoIterator<Item = SpecExpr>) -> SpecExpr {
    SpecExpr::conj(items)
}

/// Bounds and divisor checks that make a program expression defined.
fn code_guards(e: &ProgExpr, out: &mut Vec<SpecExpr>) {
    let push = |g: SpecExpr, out: &mut Vec<SpecExpr>| {
        if !out.contains(&g) {
            out.push(g);
        }
    };
    let len = |n: &str| SpecExpr::Len(Box::new(SpecExpr::name(n)));
    match e {
        ProgExpr::Num(_) | ProgExpr::Bool(_) | ProgExpr::Name(_) => {}
        ProgExpr::Arith(op, a, b) => {
            code_guards(a, out);
            code_guards(b, out);
            let literal_nonzero = matches!(&**b, ProgExpr::Num(r) if *r != crate::spec_lang::Rational::from_integer(0.into()));
            if *op == ArithOp::Div && !literal_nonzero {
                push(SpecExpr::rel(RelOp::Ne, prog_expr_to_spec(b), SpecExpr::zero()), out);
            }
        }
        ProgExpr::Index(n, i) => {
            code_guards(i, out);
            let i = prog_expr_to_spec(i);
            push(SpecExpr::rel(RelOp::Le, SpecExpr::zero(), i.clone()), out);
            push(SpecExpr::rel(RelOp::Lt, i, len(n)), out);
        }
        ProgExpr::Slice(n, i, j) => {
            code_guards(i, out);
            code_guards(j, out);
            let (i, j) = (prog_expr_to_spec(i), prog_expr_to_spec(j));
            push(SpecExpr::rel(RelOp::Le, SpecExpr::zero(), i.clone()), out);
            push(SpecExpr::rel(RelOp::Le, i, j.clone()), out);
            push(SpecExpr::rel(RelOp::Le, j, len(n)), out);
        }
        ProgExpr::Not(a) => code_guards(a, out),
        // `and`/`or` short-circuit, so guards of the right operand are conditional
        ProgExpr::And(a, b) | ProgExpr::Or(a, b) => {
            code_guards(a, out);
            let mut inner = Vec::new();
            code_guards(b, &mut inner);
            if !inner.is_empty() {
                let cond = prog_expr_to_spec(a);
                let cond = if matches!(e, ProgExpr::And(..)) { cond } else { negate(&cond) };
                push(SpecExpr::implies(cond, and(inner)), out);
            }
        }
        ProgExpr::Cmp(_, a, b) => {
            code_guards(a, out);
            code_guards(b, out);
        }
    }
}

fn target_guards(t: &Target, out: &mut Vec<SpecExpr>) {
    if let Target::Index(n, i) = t {
        code_guards(&ProgExpr::Index(n.clone(), Box::new(i.clone())), out);
    }
}

/// Assignment bindings as formula substitutions; `a[i] := e` becomes `a := store(a, i, e)`.
pub fn lift_bindings(bindings: &[(Target, ProgExpr)]) -> Vec<(String, SpecExpr)> {
    bindings
        .iter()
        .map(|(t, e)| match t {
            Target::Name(n) => (n.clone(), prog_expr_to_spec(e)),
            Target::Index(n, i) => (
                n.clone(),
                SpecExpr::Store(
                    Box::new(SpecExpr::name(n)),
                    Box::new(prog_expr_to_spec(i)),
                    Box::new(prog_expr_to_spec(e)),
                ),
            ),
        })
        .collect()
}

/// Code for a simultaneous assignment. Emitted left to right unless a later
/// right-hand side reads an earlier target, in which case every value is
/// first saved in a fresh temporary.
pub fn assignment_code(bindings: &[(Target, ProgExpr)], taken: &BTreeSet<String>) -> Statement {
    let reads = |t: &Target, e: &ProgExpr| {
        let mut names = e.names();
        if let Target::Index(_, i) = t {
            names.extend(i.names());
        }
        names
    };
    let conflict = bindings.iter().enumerate().any(|(k, (t, _))| {
        bindings[k + 1..].iter().any(|(t2, e2)| reads(t2, e2).iter().any(|n| n == t.base()))
    });
    if !conflict {
        return Statement::seq(
            bindings.iter().map(|(t, e)| Statement::Assign { target: t.clone(), value: e.clone() }),
        );
    }
    let mut taken = taken.clone();
    let fresh = |taken: &mut BTreeSet<String>| {
        let n = fresh_name("t", taken);
        taken.insert(n.clone());
        n
    };
    let mut saves = Vec::new();
    let mut stores = Vec::new();
    for (t, e) in bindings {
        let v = fresh(&mut taken);
        saves.push(Statement::assign(v.clone(), e.clone()));
        let target = match t {
            Target::Name(n) => Target::Name(n.clone()),
            Target::Index(n, i) => {
                let k = fresh(&mut taken);
                saves.push(Statement::assign(k.clone(), i.clone()));
                Target::Index(n.clone(), ProgExpr::name(k))
            }
        };
        stores.push(Statement::Assign { target, value: ProgExpr::name(v) });
    }
    Statement::seq(saves.into_iter().chain(stores))
}

struct Builder<'a> {
    stmt: &'a SpecStatement,
    node: usize,
    law: String,
    obligations: Vec<ProofObligation>,
}

impl Builder<'_> {
    /// Adds `leading /\ body /\ context -> conclusion`, omitting context facts already present.
    fn add(&mut self, label: &str, leading: Vec<SpecExpr>, body: &SpecExpr, conclusion: SpecExpr) {
        self.add_in(label, leading, body, conclusion, self.stmt.env());
    }

    fn add_in(
        &mut self,
        label: &str,
        leading: Vec<SpecExpr>,
        body: &SpecExpr,
        conclusion: SpecExpr,
        env: Vec<TypedParam>,
    ) {
        let present: Vec<&SpecExpr> = body.conjuncts();
        let extra: Vec<SpecExpr> =
            self.stmt.context.iter().filter(|c| !present.contains(c)).cloned().collect();
        let hypothesis = and(leading.into_iter().chain([body.clone()]).chain(extra));
        self.obligations.push(ProofObligation {
            label: label.to_string(),
            hypothesis,
            conclusion,
            env,
            node: self.node,
            law: self.law.clone(),
            status: ObligationStatus::Pending,
        });
    }

    fn defined(&mut self, label: &str, leading: Vec<SpecExpr>, body: &SpecExpr, guards: Vec<SpecExpr>) {
        if !guards.is_empty() {
            self.add(label, leading, body, and(guards));
        }
    }
}

fn inits_in(stmt: &SpecStatement, e: &SpecExpr) -> Vec<SpecExpr> {
    let used = e.init_vars();
    let env = stmt.env();
    snapshot_equations(env.iter().filter(|p| used.contains(&p.name)).map(|p| p.name.as_str()))
}

fn to_prog(e: &SpecExpr, what: &str) -> Result<ProgExpr, RefineError> {
    spec_to_prog_expr(e).ok_or_else(|| RefineError::Mismatch(format!("{what} is not a program expression")))
}

fn subst(e: &SpecExpr, b: &[(String, SpecExpr)]) -> Result<SpecExpr, RefineError> {
    substitute(e, b).map_err(|err| RefineError::Mismatch(err.to_string()))
}

/// Applies `law` to `stmt`, the statement of tree node `node`.
pub fn apply_law(
    stmt: &SpecStatement,
    law: &RefinementLaw,
    node: usize,
    library: &Library,
) -> Result<RefinementStep, RefineError> {
    check_law(law, stmt)?;
    let mut b = Builder { stmt, node, law: render_law(law), obligations: Vec::new() };
    let mut procedure = None;
    let taken: BTreeSet<String> = stmt.env().into_iter().map(|p| p.name).collect();
    let (children, code) = match law {
        RefinementLaw::Skip | RefinementLaw::InitSkip => {
            let inits = snapshot_equations(stmt.frame.iter().map(|p| p.name.as_str()));
            b.add(law.keyword(), inits, &stmt.pre, stmt.post.clone());
            (vec![], CodeTemplate::Stmt(Statement::Pass))
        }
        RefinementLaw::Seq { mid } => (
            vec![stmt.with(stmt.pre.clone(), mid.clone()), stmt.with(mid.clone(), stmt.post.clone())],
            CodeTemplate::Seq(vec![CodeTemplate::Child(0), CodeTemplate::Child(1)]),
        ),
        RefinementLaw::FlexSeq { a, b: mid_b, c, d } => {
            b.add("flexseq pre", vec![], &stmt.pre, a.clone());
            b.add("flexseq mid", vec![], mid_b, c.clone());
            b.add("flexseq post", vec![], d, stmt.post.clone());
            (
                vec![stmt.with(a.clone(), mid_b.clone()), stmt.with(c.clone(), d.clone())],
                CodeTemplate::Seq(vec![CodeTemplate::Child(0), CodeTemplate::Child(1)]),
            )
        }
        RefinementLaw::Assign { bindings } => {
            let conclusion = subst(&stmt.post, &lift_bindings(bindings))?;
            let mut guards = Vec::new();
            for (t, e) in bindings {
                target_guards(t, &mut guards);
                code_guards(e, &mut guards);
            }
            b.add("assign", inits_in(stmt, &stmt.post), &stmt.pre, conclusion);
            b.defined("assign defined", vec![], &stmt.pre, guards);
            (vec![], CodeTemplate::Stmt(assignment_code(bindings, &taken)))
        }
        RefinementLaw::FollowAssign { bindings } => {
            let mid = subst(&stmt.post, &lift_bindings(bindings))?;
            let mut guards = Vec::new();
            for (t, e) in bindings {
                target_guards(t, &mut guards);
                code_guards(e, &mut guards);
            }
            b.defined("followassign defined", inits_in(stmt, &mid), &mid, guards);
            (
                vec![stmt.with(stmt.pre.clone(), mid)],
                CodeTemplate::Seq(vec![
                    CodeTemplate::Child(0),
                    CodeTemplate::Stmt(assignment_code(bindings, &taken)),
                ]),
            )
        }
        RefinementLaw::IfElse { guard } => {
            let g = prog_expr_to_spec(guard);
            let mut guards = Vec::new();
            code_guards(guard, &mut guards);
            b.defined("ifelse defined", vec![], &stmt.pre, guards);
            (
                vec![
                    stmt.with(and([stmt.pre.clone(), g.clone()]), stmt.post.clone()),
                    stmt.with(and([stmt.pre.clone(), negate(&g)]), stmt.post.clone()),
                ],
                CodeTemplate::If {
                    cond: guard.clone(),
                    then_branch: Box::new(CodeTemplate::Child(0)),
                    else_branch: Box::new(CodeTemplate::Child(1)),
                },
            )
        }
        RefinementLaw::Iterate { inv, guard, variant, mode } => {
            let g = prog_expr_to_spec(guard);
            let v0 = SpecExpr::init(variant.clone());
            let decrease = SpecExpr::rel(RelOp::Lt, variant.clone(), v0);
            let body_post = match mode {
                IterMode::Initialised => and([
                    inv.clone(),
                    SpecExpr::rel(RelOp::Le, SpecExpr::zero(), variant.clone()),
                    decrease,
                ]),
                IterMode::Flexible => and([inv.clone(), decrease]),
            };
            let mut guards = Vec::new();
            code_guards(guard, &mut guards);
            b.add("iterate exit", vec![], &and([inv.clone(), negate(&g)]), stmt.post.clone());
            b.defined("iterate defined", vec![], inv, guards);
            let mut children = Vec::new();
            let mut seq = Vec::new();
            if inv != &stmt.pre {
                children.push(stmt.with(stmt.pre.clone(), inv.clone()));
                seq.push(CodeTemplate::Child(0));
            }
            let body_idx = children.len();
            children.push(stmt.with(and([inv.clone(), g]), body_post));
            let body = match mode {
                IterMode::Initialised => CodeTemplate::Child(body_idx),
                IterMode::Flexible => {
                    let v = to_prog(variant, "the variant")?;
                    let snap = if taken.contains("v0") { fresh_name("v0_", &taken) } else { "v0".into() };
                    CodeTemplate::Seq(vec![
                        CodeTemplate::Stmt(Statement::assign(snap.clone(), v.clone())),
                        CodeTemplate::Child(body_idx),
                        CodeTemplate::Stmt(Statement::Assert(ProgExpr::cmp(
                            crate::prog_lang::CmpOp::Ne,
                            v,
                            ProgExpr::name(snap),
                        ))),
                    ])
                }
            };
            seq.push(CodeTemplate::While { cond: guard.clone(), body: Box::new(body) });
            (children, CodeTemplate::Seq(seq))
        }
        RefinementLaw::Traverse { array: _, index, lo, hi, inv } => {
            let at = |e: &SpecExpr| instantiate(inv, &[(index.clone(), e.clone())]);
            let i = SpecExpr::name(index.clone());
            let index_ty = stmt.lookup(index).map(|p| p.ty.clone()).unwrap_or(SpecType::Nat);
            b.add("traverse range", vec![], &stmt.pre, SpecExpr::rel(RelOp::Le, lo.clone(), hi.clone()));
            let exit_post = instantiate(&stmt.post, &[(index.clone(), hi.clone())]);
            b.add("traverse exit", vec![], &at(hi), exit_post);
            let first = stmt.with(stmt.pre.clone(), at(lo));
            let mut body_stmt = stmt.clone();
            body_stmt.frame.retain(|p| &p.name != index);
            body_stmt.constants.push(TypedParam::new(index.clone(), index_ty));
            body_stmt.pre = and([
                inv.clone(),
                SpecExpr::rel(RelOp::Le, lo.clone(), i.clone()),
                SpecExpr::rel(RelOp::Lt, i.clone(), hi.clone()),
            ]);
            body_stmt.post = at(&SpecExpr::arith(ArithOp::Add, i, SpecExpr::one()));
            let ip = ProgExpr::name(index.clone());
            (
                vec![first, body_stmt],
                CodeTemplate::Seq(vec![
                    CodeTemplate::Child(0),
                    CodeTemplate::Stmt(Statement::assign(index.clone(), to_prog(lo, "m")?)),
                    CodeTemplate::While {
                        cond: ProgExpr::cmp(crate::prog_lang::CmpOp::Lt, ip.clone(), to_prog(hi, "n")?),
                        body: Box::new(CodeTemplate::Seq(vec![
                            CodeTemplate::Child(1),
                            CodeTemplate::Stmt(Statement::assign(
                                index.clone(),
                                ProgExpr::arith(ArithOp::Add, ip, ProgExpr::int(1)),
                            )),
                        ])),
                    },
                ]),
            )
        }
        RefinementLaw::Expand { var, init } => {
            let mut child = stmt.clone();
            child.frame.push(var.clone());
            child.post = and([
                stmt.post.clone(),
                SpecExpr::rel(RelOp::Eq, SpecExpr::name(var.name.clone()), init.clone()),
            ]);
            (vec![child], CodeTemplate::Child(0))
        }
        RefinementLaw::ProcCall { name, args } => {
            let entry = library
                .get(name)
                .ok_or_else(|| RefineError::Mismatch(format!("no procedure `{name}` in the library")))?;
            let actual = entry.instantiation(args, stmt)?;
            b.add("call pre", vec![], &stmt.pre, instantiate(&entry.pre, &actual));
            b.add("call post", vec![], &instantiate(&entry.post, &actual), stmt.post.clone());
            procedure = Some(entry.clone());
            (
                vec![],
                CodeTemplate::Stmt(Statement::Call { name: name.clone(), args: args.clone() }),
            )
        }
    };
    Ok(RefinementStep { children, code, obligations: b.obligations, procedure })
}
