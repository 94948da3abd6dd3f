//! Normalizing obligations before checking: snapshot names and definedness guards.

use std::collections::BTreeSet;

use crate::refinement::ProofObligation;
use crate::spec_lang::{
    eval_bool, fresh_name, instantiate, Carriers, RelOp, SpecExpr, SpecType, TypedParam, Valuation,
};

/// An obligation with `Init` nodes replaced by snapshot names and guards made explicit.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    /// Free names in enumeration order: the obligation's env, then snapshots.
    pub env: Vec<TypedParam>,
    /// Snapshot name for each variant read under `Init`.
    pub snapshots: Vec<(String, String)>,
    pub guards: Vec<SpecExpr>,
    pub hypothesis: SpecExpr,
    pub conclusion: SpecExpr,
}

impl Prepared {
    pub fn new(ob: &ProofObligation) -> Self {
        Prepared::from_parts(&ob.hypothesis, &ob.conclusion, &ob.env)
    }

    pub fn from_parts(hypothesis: &SpecExpr, conclusion: &SpecExpr, env: &[TypedParam]) -> Self {
        let mut taken: BTreeSet<String> = env.iter().map(|p| p.name.clone()).collect();
        hypothesis.visit(&mut |e| collect_names(e, &mut taken));
        conclusion.visit(&mut |e| collect_names(e, &mut taken));
        let mut snapshots: Vec<(String, String)> = Vec::new();
        let mut env = env.to_vec();
        let mut used = hypothesis.init_vars();
        used.extend(conclusion.init_vars());
        for p in env.clone() {
            if used.contains(&p.name) && !p.is_constant() {
                let snap = if taken.contains(&format!("{}_0", p.name)) {
                    fresh_name(&format!("{}_0", p.name), &taken)
                } else {
                    format!("{}_0", p.name)
                };
                taken.insert(snap.clone());
                env.push(TypedParam::new(snap.clone(), p.ty.clone()));
                snapshots.push((p.name.clone(), snap));
            }
        }
        let hypothesis = strip_init(hypothesis, &snapshots);
        let conclusion = strip_init(conclusion, &snapshots);
        let mut guards = Vec::new();
        definedness(&hypothesis, &mut guards);
        definedness(&conclusion, &mut guards);
        Prepared { env, snapshots, guards, hypothesis, conclusion }
    }

    /// Guards followed by hypothesis conjuncts.
    pub fn premises(&self) -> Vec<SpecExpr> {
        self.guards.iter().cloned().chain(self.hypothesis.conjuncts().into_iter().cloned()).collect()
    }

    pub fn names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for e in self.premises().iter().chain([&self.conclusion]) {
            out.extend(e.free_vars());
        }
        out
    }

    pub fn type_of(&self, name: &str) -> Option<&SpecType> {
        self.env.iter().find(|p| p.name == name).map(|p| &p.ty)
    }

    /// Whether `v` satisfies every premise and falsifies the conclusion.
    pub fn refutes(&self, v: &Valuation, domains: &dyn Carriers) -> bool {
        let empty = Valuation::new();
        self.premises().iter().all(|p| eval_bool(p, v, &empty, domains) == Ok(true))
            && eval_bool(&self.conclusion, v, &empty, domains) == Ok(false)
    }

    /// Renders a counterexample with snapshot names written as `x_0`.
    pub fn display_names(&self, v: &Valuation) -> Valuation {
        let mut out = Valuation::new();
        for (k, val) in v.iter() {
            let name = self
                .snapshots
                .iter()
                .find(|(_, s)| s == k)
                .map(|(x, _)| format!("{x}_0"))
                .unwrap_or_else(|| k.clone());
            out.set(name, val.clone());
        }
        out
    }
}

fn collect_names(e: &SpecExpr, out: &mut BTreeSet<String>) {
    match e {
        SpecExpr::Var(n) | SpecExpr::Const(n) => {
            out.insert(n.clone());
        }
        SpecExpr::Quant(_, p, _) => {
            out.insert(p.name.clone());
        }
        _ => {}
    }
}

fn strip_init(e: &SpecExpr, snapshots: &[(String, String)]) -> SpecExpr {
    match e {
        SpecExpr::Init(inner) => {
            let free = inner.free_vars();
            let bindings: Vec<(String, SpecExpr)> = snapshots
                .iter()
                .filter(|(x, _)| free.contains(x))
                .map(|(x, s)| (x.clone(), SpecExpr::Var(s.clone())))
                .collect();
            instantiate(inner, &bindings)
        }
        other => other.map_children(|c| strip_init(c, snapshots)),
    }
}

/// Divisors are nonzero and indices in range, for nodes outside any binder.
fn definedness(e: &SpecExpr, out: &mut Vec<SpecExpr>) {
    fn push(g: SpecExpr, out: &mut Vec<SpecExpr>) {
        if !out.contains(&g) {
            out.push(g);
        }
    }
    fn walk(e: &SpecExpr, bound: &mut Vec<String>, out: &mut Vec<SpecExpr>) {
        let free = |x: &SpecExpr, bound: &Vec<String>| !x.free_vars().iter().any(|n| bound.contains(n));
        let len = |a: &SpecExpr| SpecExpr::Len(Box::new(a.clone()));
        match e {
            SpecExpr::Quant(_, p, body) => {
                bound.push(p.name.clone());
                walk(body, bound, out);
                bound.pop();
                return;
            }
            SpecExpr::Arith(crate::spec_lang::ArithOp::Div, _, d) if free(d, bound) => {
                if !matches!(&**d, SpecExpr::Num(r) if *r != crate::spec_lang::Rational::from_integer(0.into())) {
                    push(SpecExpr::rel(RelOp::Ne, (**d).clone(), SpecExpr::zero()), out);
                }
            }
            SpecExpr::Select(a, i) | SpecExpr::Store(a, i, _) if free(e, bound) => {
                push(SpecExpr::rel(RelOp::Le, SpecExpr::zero(), (**i).clone()), out);
                push(SpecExpr::rel(RelOp::Lt, (**i).clone(), len(a)), out);
            }
            SpecExpr::Slice(a, i, j) if free(e, bound) => {
                push(SpecExpr::rel(RelOp::Le, SpecExpr::zero(), (**i).clone()), out);
                push(SpecExpr::rel(RelOp::Le, (**i).clone(), (**j).clone()), out);
                push(SpecExpr::rel(RelOp::Le, (**j).clone(), len(a)), out);
            }
            _ => {}
        }
        e.for_each_child(|c| walk(c, bound, out));
    }
    walk(e, &mut Vec::new(), out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec_lang::{parse_params, parse_spec_expr, render_spec_expr};

    #[test]
    fn snapshots_and_guards() {
        let env = parse_params("(N:float) (x:float) (y:float) (a:array int) (i:nat)").unwrap();
        let h = parse_spec_expr("x = x_0 /\\ y > 0", &env).unwrap();
        let c = parse_spec_expr("N/y < (y-x)_0 /\\ a[i] = 0", &env).unwrap();
        let p = Prepared::from_parts(&h, &c, &env);
        assert_eq!(p.snapshots, vec![("x".to_string(), "x_0".to_string()), ("y".to_string(), "y_0".to_string())]);
        let guards: Vec<String> = p.guards.iter().map(render_spec_expr).collect();
        assert_eq!(guards, ["y <> 0", "0 <= i", "i < len(a)"]);
        assert!(!p.conclusion.contains_init());
        assert!(!p.hypothesis.contains_init());
    }
}
