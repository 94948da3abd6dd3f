//! A rule-based proposer.
//!
//! Rules are tried in order and the first proposal not already in the node's
//! failure history wins:
//! 1. `skip` when the bounded checker proves pre -> post
//! 2. a library call from the hints
//! 3. `iterate` when the post is the pre plus one exit condition
//! 4. `traverse` when the post ranges over an array frame variable
//! 5. `assign` solved from equalities in the post, then from a small
//!    candidate search screened on the bounded grid
//! 6. `seq` splitting off the last conjunct of the post
//! 7. `ifelse` on the one conjunct a candidate assignment misses

use std::collections::BTreeSet;

use crate::prog_lang::{spec_to_prog_expr, ProgExpr, Target};
use crate::refinement::{apply_law, negate, render_law, IterMode, Library, ProofObligation, RefinementLaw, SpecStatement};
use crate::spec_lang::{
    fresh_name, instantiate, type_check, ArithOp, Quantifier, RelOp, SpecExpr, SpecType, TypedParam,
};
use crate::verifier::{check_bounded, DomainSpec, Prepared, Verdict};

use super::{parse_proposal, LawProposal, Oracle, OracleContext, OracleError};

/// Screening budget per obligation; screening is advisory, the verifier decides.
const SCREEN_BUDGET: u64 = 200_000;

pub struct HeuristicOracle {
    domains: DomainSpec,
}

impl HeuristicOracle {
    pub fn new(mut domains: DomainSpec) -> Self {
        domains.budget = domains.budget.min(SCREEN_BUDGET);
        HeuristicOracle { domains }
    }

    fn verdicts(&self, stmt: &SpecStatement, law: &RefinementLaw) -> Option<Vec<(ProofObligation, Verdict)>> {
        let step = apply_law(stmt, law, 0, &Library::new()).ok()?;
        Some(
            step.obligations
                .into_iter()
                .map(|ob| {
                    let v = check_bounded(&Prepared::new(&ob), &self.domains);
                    (ob, v)
                })
                .collect(),
        )
    }

    /// Whether every obligation of `law` holds on the grid.
    fn screens(&self, stmt: &SpecStatement, law: &RefinementLaw) -> bool {
        self.verdicts(stmt, law).is_some_and(|vs| vs.iter().all(|(_, v)| *v == Verdict::Proved))
    }

    fn holds(&self, hyp: &SpecExpr, concl: &SpecExpr, env: &[TypedParam]) -> Verdict {
        check_bounded(&Prepared::from_parts(hyp, concl, env), &self.domains)
    }

    /// For an assignment whose main obligation fails on exactly one conjunct
    /// of its conclusion, that conjunct as a guard.
    fn near_miss(&self, stmt: &SpecStatement, law: &RefinementLaw) -> Option<ProgExpr> {
        let vs = self.verdicts(stmt, law)?;
        let mut missed = None;
        for (ob, v) in &vs {
            match v {
                Verdict::Proved => continue,
                _ if ob.label != "assign" => return None,
                _ => {}
            }
            let mut failing = Vec::new();
            for c in ob.conclusion.conjuncts() {
                if self.holds(&ob.hypothesis, c, &ob.env) != Verdict::Proved {
                    failing.push(c.clone());
                }
            }
            let [c] = &failing[..] else { return None };
            if c.contains_init() {
                return None;
            }
            missed = Some(c.clone());
        }
        let c = missed?;
        // a guard that never holds would leave a dead branch
        if !matches!(self.holds(&stmt.pre, &negate(&c), &stmt.env()), Verdict::Refuted(_)) {
            return None;
        }
        spec_to_prog_expr(&c)
    }
}

impl Oracle for HeuristicOracle {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn propose(&mut self, ctx: &OracleContext) -> Result<LawProposal, OracleError> {
        let tried: BTreeSet<&str> = ctx.history.iter().map(|f| f.proposal.as_str()).collect();
        let fresh = |law: &RefinementLaw| !tried.contains(render_law(law).as_str());
        let stmt = &ctx.statement;

        if fresh(&RefinementLaw::Skip) && self.screens(stmt, &RefinementLaw::Skip) {
            return Ok(LawProposal::new(RefinementLaw::Skip, "the precondition already establishes the postcondition"));
        }
        for h in &ctx.hints {
            if let Ok(p) = parse_proposal(&h.call, ctx) {
                if fresh(&p.law) {
                    return Ok(LawProposal::new(p.law, format!("library procedure {}", h.signature)));
                }
            }
        }
        if let Some(law) = iterate_rule(stmt).filter(&fresh) {
            return Ok(LawProposal::new(law, "the postcondition is the precondition plus an exit condition"));
        }
        if let Some(law) = traverse_rule(stmt).filter(&fresh) {
            return Ok(LawProposal::new(law, "the postcondition ranges over an array"));
        }
        if let Some(law) = solved_assignment(stmt).filter(&fresh) {
            if self.verdicts(stmt, &law).is_some_and(|vs| !vs.iter().any(|(_, v)| matches!(v, Verdict::Refuted(_)))) {
                return Ok(LawProposal::new(law, "the postcondition defines the variant"));
            }
        }
        let singles = single_candidates(stmt);
        for law in singles.iter().filter(|l| fresh(l)) {
            if self.screens(stmt, law) {
                return Ok(LawProposal::new(law.clone(), "candidate assignment holds on the grid"));
            }
        }
        let pairs = pair_candidates(stmt);
        for law in pairs.iter().filter(|l| fresh(l)) {
            if self.screens(stmt, law) {
                return Ok(LawProposal::new(law.clone(), "candidate assignment holds on the grid"));
            }
        }
        if let Some(law) = seq_rule(stmt).filter(&fresh) {
            return Ok(LawProposal::new(law, "split off the last conjunct"));
        }
        for law in singles.iter().chain(&pairs) {
            if let Some(guard) = self.near_miss(stmt, law) {
                let law = RefinementLaw::IfElse { guard };
                if fresh(&law) {
                    return Ok(LawProposal::new(law, "a candidate assignment works under this guard"));
                }
            }
        }
        Err(OracleError::NoProposalFound(format!("no rule applies to {}", stmt.render())))
    }
}

fn and(items: impl IntoIterator<Item = SpecExpr>) -> SpecExpr {
    SpecExpr::conj(items)
}

fn var_names(stmt: &SpecStatement, e: &SpecExpr) -> bool {
    let frame = stmt.frame_names();
    e.free_vars().iter().any(|n| frame.contains(n))
}

fn iterate_rule(stmt: &SpecStatement) -> Option<RefinementLaw> {
    if stmt.post.contains_init() {
        return None;
    }
    let pre: Vec<&SpecExpr> = stmt.pre.conjuncts();
    let post: Vec<&SpecExpr> = stmt.post.conjuncts();
    let k = post.iter().position(|c| !pre.contains(c))?;
    let rest: Vec<SpecExpr> = post.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, c)| (*c).clone()).collect();
    if rest.is_empty() || post[k + 1..].iter().any(|c| !pre.contains(c)) {
        return None;
    }
    let exit = post[k];
    let SpecExpr::Rel(op, a, b) = exit else { return None };
    let (a, b) = ((**a).clone(), (**b).clone());
    let guard = spec_to_prog_expr(&negate(exit))?;
    let env = stmt.env();
    let float = type_check(&SpecExpr::arith(ArithOp::Sub, a.clone(), b.clone()), &env).ok()? == SpecType::Float;
    let diff = |x: &SpecExpr, y: &SpecExpr| SpecExpr::arith(ArithOp::Sub, x.clone(), y.clone());
    let variant = match op {
        RelOp::Le => diff(&a, &b),
        RelOp::Ge => diff(&b, &a),
        RelOp::Lt if float => diff(&a, &b),
        RelOp::Gt if float => diff(&b, &a),
        RelOp::Lt => SpecExpr::arith(ArithOp::Add, diff(&a, &b), SpecExpr::one()),
        RelOp::Gt => SpecExpr::arith(ArithOp::Add, diff(&b, &a), SpecExpr::one()),
        // the side holding variants is taken to increase towards the other
        RelOp::Eq if var_names(stmt, &a) => diff(&b, &a),
        RelOp::Eq => diff(&a, &b),
        RelOp::Ne => return None,
    };
    let mode = if float { IterMode::Flexible } else { IterMode::Initialised };
    Some(RefinementLaw::Iterate { inv: and(rest), guard, variant, mode })
}

/// `forall k, (m <= k /\ k < n) -> body` split into its parts.
fn ranged(e: &SpecExpr) -> Option<(&TypedParam, &SpecExpr, &SpecExpr, &SpecExpr)> {
    let SpecExpr::Quant(Quantifier::Forall, k, body) = e else { return None };
    let SpecExpr::Implies(range, q) = &**body else { return None };
    let [SpecExpr::Rel(RelOp::Le, m, k1), SpecExpr::Rel(RelOp::Lt, k2, n)] = &range.conjuncts()[..] else {
        return None;
    };
    let bound = SpecExpr::name(k.name.clone());
    if **k1 != bound || **k2 != bound {
        return None;
    }
    Some((k, m, n, q))
}

fn traverse_rule(stmt: &SpecStatement) -> Option<RefinementLaw> {
    let pre: Vec<&SpecExpr> = stmt.pre.conjuncts();
    let post: Vec<&SpecExpr> = stmt.post.conjuncts();
    let k = post.iter().position(|c| ranged(c).is_some())?;
    if post.iter().enumerate().any(|(i, c)| i != k && !pre.contains(c)) {
        return None;
    }
    let (bound, m, n, q) = ranged(post[k])?;
    let qvars = q.free_vars();
    let array = stmt
        .frame
        .iter()
        .find(|p| matches!(p.ty, SpecType::Array(_)) && qvars.contains(&p.name))?
        .name
        .clone();
    let taken: BTreeSet<String> = stmt.env().into_iter().map(|p| p.name).chain([bound.name.clone()]).collect();
    let index = stmt
        .frame
        .iter()
        .find(|p| p.ty.is_integral() && !qvars.contains(&p.name) && p.name != bound.name)
        .map(|p| p.name.clone())
        .unwrap_or_else(|| if taken.contains("i") { fresh_name("i", &taken) } else { "i".into() });
    let i = SpecExpr::name(index.clone());
    let upto = SpecExpr::Quant(
        Quantifier::Forall,
        bound.clone(),
        Box::new(SpecExpr::implies(
            and([
                SpecExpr::rel(RelOp::Le, m.clone(), SpecExpr::name(bound.name.clone())),
                SpecExpr::rel(RelOp::Lt, SpecExpr::name(bound.name.clone()), i),
            ]),
            q.clone(),
        )),
    );
    // element updates leave other names and the array's length unchanged
    let kept = pre.iter().filter(|c| !c.free_vars().contains(&index) && reads_only_length(c, &array));
    let inv = and(kept.map(|c| (*c).clone()).chain([upto]));
    Some(RefinementLaw::Traverse { array, index, lo: m.clone(), hi: n.clone(), inv })
}

fn reads_only_length(e: &SpecExpr, array: &str) -> bool {
    match e {
        SpecExpr::Len(inner) if matches!(&**inner, SpecExpr::Var(n) if n == array) => true,
        SpecExpr::Var(n) => n != array,
        _ => {
            let mut ok = true;
            e.for_each_child(|c| ok &= reads_only_length(c, array));
            ok
        }
    }
}

/// Equalities `x = E` and `a[i] = E` in the post with `E` free of variants,
/// including the newest instance of a range that grows by one.
fn solved_assignment(stmt: &SpecStatement) -> Option<RefinementLaw> {
    if stmt.post.contains_init() {
        return None;
    }
    let pre: Vec<&SpecExpr> = stmt.pre.conjuncts();
    let mut facts: Vec<SpecExpr> = Vec::new();
    for c in stmt.post.conjuncts() {
        if pre.contains(&c) {
            continue;
        }
        match ranged(c) {
            Some((k, _, n, q)) => {
                let SpecExpr::Arith(ArithOp::Add, last, one) = n else { continue };
                if **one == SpecExpr::one() {
                    facts.extend(instantiate(q, &[(k.name.clone(), (**last).clone())]).conjuncts().into_iter().cloned());
                }
            }
            None => facts.push(c.clone()),
        }
    }
    let frame = stmt.frame_names();
    let mut bindings: Vec<(Target, ProgExpr)> = Vec::new();
    for f in &facts {
        let SpecExpr::Rel(RelOp::Eq, lhs, rhs) = f else { continue };
        for (l, r) in [(&**lhs, &**rhs), (&**rhs, &**lhs)] {
            if var_names(stmt, r) {
                continue;
            }
            let target = match l {
                SpecExpr::Var(x) if frame.contains(x) => Target::Name(x.clone()),
                SpecExpr::Select(a, idx) => match (&**a, spec_to_prog_expr(idx)) {
                    (SpecExpr::Var(x), Some(i)) if frame.contains(x) && !var_names(stmt, idx) => Target::Index(x.clone(), i),
                    _ => continue,
                },
                _ => continue,
            };
            let Some(value) = spec_to_prog_expr(r) else { continue };
            if bindings.iter().all(|(t, _)| t.base() != target.base()) {
                bindings.push((target, value));
            }
            break;
        }
    }
    (!bindings.is_empty()).then_some(RefinementLaw::Assign { bindings })
}

fn value_candidates(stmt: &SpecStatement, target: &str, ty: &SpecType) -> Vec<ProgExpr> {
    let mut out = vec![ProgExpr::int(0), ProgExpr::int(1)];
    let scalar = |p: &&TypedParam| p.ty.is_numeric();
    let add = |e: ProgExpr, k: i64| ProgExpr::arith(ArithOp::Add, e, ProgExpr::int(k));
    let sub = |e: ProgExpr, k: i64| ProgExpr::arith(ArithOp::Sub, e, ProgExpr::int(k));
    for c in stmt.constants.iter().filter(scalar) {
        out.push(ProgExpr::name(c.name.clone()));
        out.push(add(ProgExpr::name(c.name.clone()), 1));
    }
    let vars: Vec<&TypedParam> = stmt.frame.iter().filter(scalar).collect();
    for v in &vars {
        if v.name != target {
            out.push(ProgExpr::name(v.name.clone()));
        }
        if ty.is_integral() {
            out.push(add(ProgExpr::name(v.name.clone()), 1));
            out.push(sub(ProgExpr::name(v.name.clone()), 1));
        }
    }
    if *ty == SpecType::Float {
        for (k, a) in vars.iter().enumerate() {
            for b in &vars[k + 1..] {
                let sum = ProgExpr::arith(ArithOp::Add, ProgExpr::name(a.name.clone()), ProgExpr::name(b.name.clone()));
                out.push(ProgExpr::arith(ArithOp::Div, sum, ProgExpr::int(2)));
            }
        }
    }
    out.retain(|e| *e != ProgExpr::name(target));
    out.dedup();
    out
}

fn single_candidates(stmt: &SpecStatement) -> Vec<RefinementLaw> {
    let mut out = Vec::new();
    for p in stmt.frame.iter().filter(|p| p.ty.is_numeric()) {
        for e in value_candidates(stmt, &p.name, &p.ty) {
            out.push(RefinementLaw::Assign { bindings: vec![(Target::Name(p.name.clone()), e)] });
        }
    }
    out.retain(|l| crate::refinement::check_law(l, stmt).is_ok());
    out
}

fn pair_candidates(stmt: &SpecStatement) -> Vec<RefinementLaw> {
    let scalars: Vec<&TypedParam> = stmt.frame.iter().filter(|p| p.ty.is_numeric()).collect();
    let mut out = Vec::new();
    for (k, a) in scalars.iter().enumerate() {
        for b in &scalars[k + 1..] {
            for ea in value_candidates(stmt, &a.name, &a.ty) {
                for eb in value_candidates(stmt, &b.name, &b.ty) {
                    out.push(RefinementLaw::Assign {
                        bindings: vec![(Target::Name(a.name.clone()), ea.clone()), (Target::Name(b.name.clone()), eb)],
                    });
                }
            }
        }
    }
    out.retain(|l| crate::refinement::check_law(l, stmt).is_ok());
    out
}

fn seq_rule(stmt: &SpecStatement) -> Option<RefinementLaw> {
    if stmt.post.contains_init() {
        return None;
    }
    let post = stmt.post.conjuncts();
    if post.len() < 2 {
        return None;
    }
    let mid = and(post[..post.len() - 1].iter().map(|c| (*c).clone()));
    (mid != stmt.pre).then_some(RefinementLaw::Seq { mid })
}
