//! Exhaustive checking over finite carriers.

use crate::spec_lang::{eval_bool, RelOp, SpecExpr, Valuation, Value};

use super::domain::DomainSpec;
use super::prepare::Prepared;
use super::Verdict;

/// Enumerates every in-domain valuation in carrier order.
///
/// Variables are bound in `env` order; each premise is checked as soon as its
/// names are bound. A snapshot `x_0` constrained by a premise `x = x_0` is bound
/// to the value of `x` instead of being enumerated. The first counterexample
/// found is therefore the lexicographically first one.
pub fn check_bounded(p: &Prepared, d: &DomainSpec) -> Verdict {
    // an unknown predicate would make every premise undefined and the check vacuous
    if let Some(name) = p.hypothesis.undefined_predicate().or_else(|| p.conclusion.undefined_predicate()) {
        return Verdict::Unknown(format!("undefined predicate `{name}`"));
    }
    let used = p.names();
    let vars: Vec<(String, crate::spec_lang::SpecType)> = p
        .env
        .iter()
        .filter(|q| used.contains(&q.name))
        .map(|q| (q.name.clone(), q.ty.clone()))
        .collect();
    if let Some(n) = used.iter().find(|n| !vars.iter().any(|(v, _)| v == *n)) {
        return Verdict::Unknown(format!("no type for `{n}`"));
    }
    let level = |e: &SpecExpr| {
        let fv = e.free_vars();
        vars.iter().rposition(|(v, _)| fv.contains(v)).map_or(0, |k| k + 1)
    };
    let premises = p.premises();
    let mut ready: Vec<Vec<&SpecExpr>> = vec![Vec::new(); vars.len() + 1];
    for q in &premises {
        ready[level(q)].push(q);
    }
    // Snapshot pinned by an equation with an earlier variable.
    let pinned: Vec<Option<usize>> = vars
        .iter()
        .enumerate()
        .map(|(k, (v, _))| {
            premises.iter().find_map(|q| match q {
                SpecExpr::Rel(RelOp::Eq, a, b) => {
                    let other = match (&**a, &**b) {
                        (SpecExpr::Var(x), SpecExpr::Var(y)) if y == v => x,
                        (SpecExpr::Var(y), SpecExpr::Var(x)) if y == v => x,
                        _ => return None,
                    };
                    vars[..k].iter().position(|(n, _)| n == other)
                }
                _ => None,
            })
        })
        .collect();
    let carriers: Vec<Vec<Value>> = vars.iter().map(|(n, t)| d.values_for(n, t)).collect();

    let mut search = Search {
        vars: &vars,
        carriers: &carriers,
        pinned: &pinned,
        ready: &ready,
        conclusion: &p.conclusion,
        domains: d,
        budget: d.budget,
        steps: 0,
        conclusion_error: None,
    };
    let mut v = Valuation::new();
    let empty = Valuation::new();
    if !ready[0].iter().all(|q| eval_bool(q, &v, &empty, d) == Ok(true)) {
        return Verdict::Proved;
    }
    match search.run(0, &mut v) {
        Err(()) => Verdict::Unknown(format!("enumeration budget of {} exceeded", d.budget)),
        Ok(Some(cex)) => {
            debug_assert!(p.refutes(&cex, d));
            Verdict::Refuted(cex)
        }
        Ok(None) => match search.conclusion_error {
            Some(err) => Verdict::Unknown(format!("conclusion undefined: {err}")),
            None => Verdict::Proved,
        },
    }
}

struct Search<'a> {
    vars: &'a [(String, crate::spec_lang::SpecType)],
    carriers: &'a [Vec<Value>],
    pinned: &'a [Option<usize>],
    ready: &'a [Vec<&'a SpecExpr>],
    conclusion: &'a SpecExpr,
    domains: &'a DomainSpec,
    budget: u64,
    steps: u64,
    conclusion_error: Option<String>,
}

impl Search<'_> {
    fn run(&mut self, k: usize, v: &mut Valuation) -> Result<Option<Valuation>, ()> {
        let empty = Valuation::new();
        if k == self.vars.len() {
            return Ok(match eval_bool(self.conclusion, v, &empty, self.domains) {
                Ok(true) => None,
                Ok(false) => Some(v.clone()),
                Err(e) => {
                    self.conclusion_error.get_or_insert_with(|| e.to_string());
                    None
                }
            });
        }
        let name = &self.vars[k].0;
        let candidates: Vec<Value> = match self.pinned[k] {
            Some(src) => vec![v.get(&self.vars[src].0).expect("bound earlier").clone()],
            None => self.carriers[k].clone(),
        };
        for value in candidates {
            self.steps += 1;
            if self.steps > self.budget {
                return Err(());
            }
            v.set(name.clone(), value);
            // Premises that fail to evaluate make the point undefined, so it is skipped.
            if self.ready[k + 1].iter().all(|q| eval_bool(q, v, &empty, self.domains) == Ok(true)) {
                if let Some(cex) = self.run(k + 1, v)? {
                    return Ok(Some(cex));
                }
            }
        }
        v.remove(name);
        Ok(None)
    }
}
