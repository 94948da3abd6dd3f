use std::collections::{BTreeMap, BTreeSet};

use super::expr::SpecExpr;
use super::types::{is_constant_name, TypedParam};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstError {
    #[error("cannot substitute constant `{0}`")]
    Constant(String),
}

/// Simultaneous capture-avoiding substitution of variants.
///
/// `Init` nodes are left untouched: they denote pre-state values. A bound name
/// that would capture a free name of some replacement is renamed by appending
/// the smallest positive integer that makes it unused.
pub fn substitute(e: &SpecExpr, bindings: &[(String, SpecExpr)]) -> Result<SpecExpr, SubstError> {
    if let Some((name, _)) = bindings.iter().find(|(n, _)| is_constant_name(n)) {
        return Err(SubstError::Constant(name.clone()));
    }
    let map: BTreeMap<String, SpecExpr> = bindings.iter().cloned().collect();
    Ok(subst_in(e, &map, false))
}

/// Like [`substitute`] but also replaces constants and names under `Init`.
///
/// Used to instantiate parameterised formulas (definitions, library entries)
/// and to snapshot initial values.
pub fn instantiate(e: &SpecExpr, bindings: &[(String, SpecExpr)]) -> SpecExpr {
    let map: BTreeMap<String, SpecExpr> = bindings.iter().cloned().collect();
    subst_in(e, &map, true)
}

fn subst_in(e: &SpecExpr, map: &BTreeMap<String, SpecExpr>, enter_init: bool) -> SpecExpr {
    if map.is_empty() {
        return e.clone();
    }
    match e {
        SpecExpr::Var(n) | SpecExpr::Const(n) => map.get(n).cloned().unwrap_or_else(|| e.clone()),
        SpecExpr::Init(_) if !enter_init => e.clone(),
        SpecExpr::Quant(q, p, body) => {
            let mut inner = map.clone();
            inner.remove(&p.name);
            if inner.is_empty() {
                return e.clone();
            }
            let replacement_fvs: BTreeSet<String> =
                inner.values().flat_map(|r| r.free_vars()).collect();
            let (param, body) = if replacement_fvs.contains(&p.name) {
                let mut taken = body.free_vars();
                taken.extend(replacement_fvs);
                taken.extend(inner.keys().cloned());
                let fresh = fresh_name(&p.name, &taken);
                let renamed = subst_in(
                    body,
                    &BTreeMap::from([(p.name.clone(), SpecExpr::name(fresh.clone()))]),
                    true,
                );
                (TypedParam { name: fresh, ..p.clone() }, renamed)
            } else {
                (p.clone(), (**body).clone())
            };
            SpecExpr::Quant(*q, param, Box::new(subst_in(&body, &inner, enter_init)))
        }
        _ => e.map_children(|c| subst_in(c, map, enter_init)),
    }
}

/// `base` followed by the smallest positive integer not in `taken`.
pub fn fresh_name(base: &str, taken: &BTreeSet<String>) -> String {
    (1..)
        .map(|k| format!("{base}{k}"))
        .find(|n| !taken.contains(n))
        .expect("unbounded search")
}
