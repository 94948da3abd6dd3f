use std::collections::BTreeSet;

use num_traits::{One, Zero};

use super::types::{is_constant_name, TypedParam};
use super::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RelOp {
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
    Ne,
}

impl RelOp {
    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Eq => "=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
            RelOp::Ne => "<>",
        }
    }

    pub fn negate(self) -> RelOp {
        match self {
            RelOp::Lt => RelOp::Ge,
            RelOp::Le => RelOp::Gt,
            RelOp::Eq => RelOp::Ne,
            RelOp::Gt => RelOp::Le,
            RelOp::Ge => RelOp::Lt,
            RelOp::Ne => RelOp::Eq,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Quantifier {
    Forall,
    Exists,
}

impl Quantifier {
    pub fn keyword(self) -> &'static str {
        match self {
            Quantifier::Forall => "forall",
            Quantifier::Exists => "exists",
        }
    }
}

/// Formula and term AST of the specification language.
///
/// Conjunctions and disjunctions are n-ary. The parser only flattens chains it
/// desugared itself, so a parenthesized conjunction nested inside another one
/// survives a render/parse round trip.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum SpecExpr {
    Num(Rational),
    Bool(bool),
    Var(String),
    Const(String),
    /// Value of the wrapped expression in the pre-state (`x_0`).
    Init(Box<SpecExpr>),
    Neg(Box<SpecExpr>),
    Arith(ArithOp, Box<SpecExpr>, Box<SpecExpr>),
    Rel(RelOp, Box<SpecExpr>, Box<SpecExpr>),
    Not(Box<SpecExpr>),
    And(Vec<SpecExpr>),
    Or(Vec<SpecExpr>),
    Implies(Box<SpecExpr>, Box<SpecExpr>),
    Quant(Quantifier, TypedParam, Box<SpecExpr>),
    Select(Box<SpecExpr>, Box<SpecExpr>),
    /// Half-open slice `a[i:j]`.
    Slice(Box<SpecExpr>, Box<SpecExpr>, Box<SpecExpr>),
    /// Functional array update `store(a, i, v)`.
    Store(Box<SpecExpr>, Box<SpecExpr>, Box<SpecExpr>),
    Len(Box<SpecExpr>),
    App(String, Vec<SpecExpr>),
}

impl SpecExpr {
    pub fn int(n: i64) -> Self {
        SpecExpr::Num(Rational::from_integer(n.into()))
    }

    pub fn num(r: Rational) -> Self {
        SpecExpr::Num(r)
    }

    /// Variable or constant reference, chosen by the case of the name.
    pub fn name(name: impl Into<String>) -> Self {
        let name = name.into();
        if is_constant_name(&name) {
            SpecExpr::Const(name)
        } else {
            SpecExpr::Var(name)
        }
    }

    pub fn init_of(name: impl Into<String>) -> Self {
        SpecExpr::Init(Box::new(SpecExpr::name(name)))
    }

    pub fn init(e: SpecExpr) -> Self {
        SpecExpr::Init(Box::new(e))
    }

    pub fn rel(op: RelOp, a: SpecExpr, b: SpecExpr) -> Self {
        SpecExpr::Rel(op, Box::new(a), Box::new(b))
    }

    pub fn arith(op: ArithOp, a: SpecExpr, b: SpecExpr) -> Self {
        SpecExpr::Arith(op, Box::new(a), Box::new(b))
    }

    pub fn not(e: SpecExpr) -> Self {
        SpecExpr::Not(Box::new(e))
    }

    pub fn implies(a: SpecExpr, b: SpecExpr) -> Self {
        SpecExpr::Implies(Box::new(a), Box::new(b))
    }

    pub fn select(a: SpecExpr, i: SpecExpr) -> Self {
        SpecExpr::Select(Box::new(a), Box::new(i))
    }

    /// Conjunction of `items`, splicing nested conjunctions and dropping `true`.
    pub fn conj(items: impl IntoIterator<Item = SpecExpr>) -> Self {
        let mut out = Vec::new();
        for item in items {
            match item {
                SpecExpr::And(inner) => out.extend(inner),
                SpecExpr::Bool(true) => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => SpecExpr::Bool(true),
            1 => out.pop().unwrap(),
            _ => SpecExpr::And(out),
        }
    }

    /// Top-level conjuncts (a non-conjunction is its own single conjunct).
    pub fn conjuncts(&self) -> Vec<&SpecExpr> {
        match self {
            SpecExpr::And(items) => items.iter().collect(),
            SpecExpr::Bool(true) => Vec::new(),
            other => vec![other],
        }
    }

    pub fn is_integer_literal(&self) -> bool {
        matches!(self, SpecExpr::Num(r) if r.is_integer())
    }

    pub fn zero() -> Self {
        SpecExpr::Num(Rational::zero())
    }

    pub fn one() -> Self {
        SpecExpr::Num(Rational::one())
    }

    /// Free variable and constant names. Names under `Init` count as free.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            SpecExpr::Var(n) | SpecExpr::Const(n) => {
                if !bound.iter().any(|b| b == n) {
                    out.insert(n.clone());
                }
            }
            SpecExpr::Quant(_, p, body) => {
                bound.push(p.name.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
            _ => self.for_each_child(|c| c.collect_free(bound, out)),
        }
    }

    /// Free names occurring inside `Init` nodes.
    pub fn init_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let SpecExpr::Init(inner) = e {
                out.extend(inner.free_vars());
            }
        });
        out
    }

    pub fn contains_init(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, SpecExpr::Init(_)));
        found
    }

    /// The name of some predicate application left uninlined.
    pub fn undefined_predicate(&self) -> Option<String> {
        let mut found = None;
        self.visit(&mut |e| {
            if let SpecExpr::App(name, _) = e {
                found.get_or_insert_with(|| name.clone());
            }
        });
        found
    }

    /// Number of `Init` nodes, counted without descending into them.
    pub fn init_nodes(&self) -> Vec<&SpecExpr> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a SpecExpr, out: &mut Vec<&'a SpecExpr>) {
            if let SpecExpr::Init(_) = e {
                out.push(e);
            } else {
                e.for_each_child(|c| walk(c, out));
            }
        }
        walk(self, &mut out);
        out
    }

    /// Pre-order traversal.
    pub fn visit(&self, f: &mut dyn FnMut(&SpecExpr)) {
        f(self);
        self.for_each_child(|c| c.visit(f));
    }

    pub fn for_each_child<'a>(&'a self, mut f: impl FnMut(&'a SpecExpr)) {
        match self {
            SpecExpr::Num(_) | SpecExpr::Bool(_) | SpecExpr::Var(_) | SpecExpr::Const(_) => {}
            SpecExpr::Init(e) | SpecExpr::Neg(e) | SpecExpr::Not(e) | SpecExpr::Len(e) => f(e),
            SpecExpr::Quant(_, _, e) => f(e),
            SpecExpr::Arith(_, a, b)
            | SpecExpr::Rel(_, a, b)
            | SpecExpr::Implies(a, b)
            | SpecExpr::Select(a, b) => {
                f(a);
                f(b);
            }
            SpecExpr::Slice(a, b, c) | SpecExpr::Store(a, b, c) => {
                f(a);
                f(b);
                f(c);
            }
            SpecExpr::And(items) | SpecExpr::Or(items) | SpecExpr::App(_, items) => {
                items.iter().for_each(f)
            }
        }
    }

    /// Rebuilds the node with every direct child mapped through `f`.
    pub fn map_children(&self, mut f: impl FnMut(&SpecExpr) -> SpecExpr) -> SpecExpr {
        let b = |e: &SpecExpr, f: &mut dyn FnMut(&SpecExpr) -> SpecExpr| Box::new(f(e));
        match self {
            SpecExpr::Num(_) | SpecExpr::Bool(_) | SpecExpr::Var(_) | SpecExpr::Const(_) => {
                self.clone()
            }
            SpecExpr::Init(e) => SpecExpr::Init(b(e, &mut f)),
            SpecExpr::Neg(e) => SpecExpr::Neg(b(e, &mut f)),
            SpecExpr::Not(e) => SpecExpr::Not(b(e, &mut f)),
            SpecExpr::Len(e) => SpecExpr::Len(b(e, &mut f)),
            SpecExpr::Quant(q, p, e) => SpecExpr::Quant(*q, p.clone(), b(e, &mut f)),
            SpecExpr::Arith(op, x, y) => SpecExpr::Arith(*op, b(x, &mut f), b(y, &mut f)),
            SpecExpr::Rel(op, x, y) => SpecExpr::Rel(*op, b(x, &mut f), b(y, &mut f)),
            SpecExpr::Implies(x, y) => SpecExpr::Implies(b(x, &mut f), b(y, &mut f)),
            SpecExpr::Select(x, y) => SpecExpr::Select(b(x, &mut f), b(y, &mut f)),
            SpecExpr::Slice(x, y, z) => {
                SpecExpr::Slice(b(x, &mut f), b(y, &mut f), b(z, &mut f))
            }
            SpecExpr::Store(x, y, z) => {
                SpecExpr::Store(b(x, &mut f), b(y, &mut f), b(z, &mut f))
            }
            SpecExpr::And(items) => SpecExpr::And(items.iter().map(&mut f).collect()),
            SpecExpr::Or(items) => SpecExpr::Or(items.iter().map(&mut f).collect()),
            SpecExpr::App(n, items) => SpecExpr::App(n.clone(), items.iter().map(&mut f).collect()),
        }
    }

    /// Divisors of every division node whose free names are not captured by a binder.
    pub fn top_level_divisors(&self) -> Vec<SpecExpr> {
        let mut out = Vec::new();
        fn walk(e: &SpecExpr, bound: &mut Vec<String>, out: &mut Vec<SpecExpr>) {
            match e {
                SpecExpr::Quant(_, p, body) => {
                    bound.push(p.name.clone());
                    walk(body, bound, out);
                    bound.pop();
                }
                SpecExpr::Arith(ArithOp::Div, a, d) => {
                    walk(a, bound, out);
                    walk(d, bound, out);
                    let captured = d.free_vars().iter().any(|n| bound.contains(n));
                    let is_nonzero_literal = matches!(&**d, SpecExpr::Num(r) if !r.is_zero());
                    if !captured && !is_nonzero_literal && !out.contains(d) {
                        out.push((**d).clone());
                    }
                }
                _ => e.for_each_child(|c| walk(c, bound, out)),
            }
        }
        walk(self, &mut Vec::new(), &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conj_splices_and_drops_true() {
        let a = SpecExpr::name("x");
        let b = SpecExpr::name("y");
        let c = SpecExpr::conj([SpecExpr::Bool(true), SpecExpr::And(vec![a.clone(), b.clone()])]);
        assert_eq!(c, SpecExpr::And(vec![a.clone(), b]));
        assert_eq!(SpecExpr::conj([a.clone()]), a);
        assert_eq!(SpecExpr::conj([]), SpecExpr::Bool(true));
    }

    #[test]
    fn divisors_skip_literals_and_bound_names() {
        let e = SpecExpr::arith(
            ArithOp::Add,
            SpecExpr::arith(ArithOp::Div, SpecExpr::name("N"), SpecExpr::name("x")),
            SpecExpr::arith(ArithOp::Div, SpecExpr::name("x"), SpecExpr::int(2)),
        );
        assert_eq!(e.top_level_divisors(), vec![SpecExpr::name("x")]);
    }
}
