use crate::spec_lang::{ArithOp, Rational, SpecType};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }
}

/// Side-effect free program expressions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProgExpr {
    Num(Rational),
    Bool(bool),
    Name(String),
    Cmp(CmpOp, Box<ProgExpr>, Box<ProgExpr>),
    And(Box<ProgExpr>, Box<ProgExpr>),
    Or(Box<ProgExpr>, Box<ProgExpr>),
    Not(Box<ProgExpr>),
    Arith(ArithOp, Box<ProgExpr>, Box<ProgExpr>),
    Index(String, Box<ProgExpr>),
    Slice(String, Box<ProgExpr>, Box<ProgExpr>),
}

impl ProgExpr {
    pub fn name(n: impl Into<String>) -> Self {
        ProgExpr::Name(n.into())
    }

    pub fn int(n: i64) -> Self {
        ProgExpr::Num(Rational::from_integer(n.into()))
    }

    pub fn arith(op: ArithOp, a: ProgExpr, b: ProgExpr) -> Self {
        ProgExpr::Arith(op, Box::new(a), Box::new(b))
    }

    pub fn cmp(op: CmpOp, a: ProgExpr, b: ProgExpr) -> Self {
        ProgExpr::Cmp(op, Box::new(a), Box::new(b))
    }

    /// Names read by the expression.
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut Vec<String>) {
        let mut push = |n: &String| {
            if !out.contains(n) {
                out.push(n.clone());
            }
        };
        match self {
            ProgExpr::Num(_) | ProgExpr::Bool(_) => {}
            ProgExpr::Name(n) => push(n),
            ProgExpr::Index(n, i) => {
                push(n);
                i.collect_names(out);
            }
            ProgExpr::Slice(n, i, j) => {
                push(n);
                i.collect_names(out);
                j.collect_names(out);
            }
            ProgExpr::Not(a) => a.collect_names(out),
            ProgExpr::Cmp(_, a, b)
            | ProgExpr::And(a, b)
            | ProgExpr::Or(a, b)
            | ProgExpr::Arith(_, a, b) => {
                a.collect_names(out);
                b.collect_names(out);
            }
        }
    }

    /// Replaces name reads according to `rename`.
    pub fn rename(&self, rename: &dyn Fn(&str) -> Option<String>) -> ProgExpr {
        let r = |n: &String| rename(n).unwrap_or_else(|| n.clone());
        let b = |e: &ProgExpr| Box::new(e.rename(rename));
        match self {
            ProgExpr::Num(_) | ProgExpr::Bool(_) => self.clone(),
            ProgExpr::Name(n) => ProgExpr::Name(r(n)),
            ProgExpr::Index(n, i) => ProgExpr::Index(r(n), b(i)),
            ProgExpr::Slice(n, i, j) => ProgExpr::Slice(r(n), b(i), b(j)),
            ProgExpr::Not(a) => ProgExpr::Not(b(a)),
            ProgExpr::Cmp(op, x, y) => ProgExpr::Cmp(*op, b(x), b(y)),
            ProgExpr::And(x, y) => ProgExpr::And(b(x), b(y)),
            ProgExpr::Or(x, y) => ProgExpr::Or(b(x), b(y)),
            ProgExpr::Arith(op, x, y) => ProgExpr::Arith(*op, b(x), b(y)),
        }
    }
}

/// Left-hand side of an assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Target {
    Name(String),
    /// `a[i] = e`: whole-array functional update of `a`.
    Index(String, ProgExpr),
}

impl Target {
    pub fn base(&self) -> &str {
        match self {
            Target::Name(n) | Target::Index(n, _) => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Statement {
    Pass,
    Assign { target: Target, value: ProgExpr },
    Seq(Vec<Statement>),
    While { cond: ProgExpr, body: Box<Statement> },
    If { cond: ProgExpr, then_branch: Box<Statement>, else_branch: Box<Statement> },
    Assert(ProgExpr),
    ProcDef { name: String, params: Vec<(String, SpecType)>, body: Box<Statement> },
    Call { name: String, args: Vec<ProgExpr> },
}

impl Statement {
    pub fn assign(name: impl Into<String>, value: ProgExpr) -> Self {
        Statement::Assign { target: Target::Name(name.into()), value }
    }

    /// Sequence that splices nested sequences; one statement stays bare.
    pub fn seq(items: impl IntoIterator<Item = Statement>) -> Self {
        let mut out = Vec::new();
        for s in items {
            match s {
                Statement::Seq(inner) => out.extend(inner),
                Statement::Pass => {}
                other => out.push(other),
            }
        }
        match out.len() {
            0 => Statement::Pass,
            1 => out.pop().unwrap(),
            _ => Statement::Seq(out),
        }
    }

    /// Canonical form: flat sequences, no singleton or empty sequences.
    pub fn normalize(&self) -> Statement {
        match self {
            Statement::Seq(items) => Statement::seq(items.iter().map(Statement::normalize)),
            Statement::While { cond, body } => {
                Statement::While { cond: cond.clone(), body: Box::new(body.normalize()) }
            }
            Statement::If { cond, then_branch, else_branch } => Statement::If {
                cond: cond.clone(),
                then_branch: Box::new(then_branch.normalize()),
                else_branch: Box::new(else_branch.normalize()),
            },
            Statement::ProcDef { name, params, body } => Statement::ProcDef {
                name: name.clone(),
                params: params.clone(),
                body: Box::new(body.normalize()),
            },
            other => other.clone(),
        }
    }

    /// Names assigned anywhere in the statement (procedure bodies excluded).
    pub fn assigned_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        fn walk(s: &Statement, out: &mut Vec<String>) {
            match s {
                Statement::Assign { target, .. } => {
                    if !out.iter().any(|n| n == target.base()) {
                        out.push(target.base().to_string());
                    }
                }
                Statement::Seq(items) => items.iter().for_each(|i| walk(i, out)),
                Statement::While { body, .. } => walk(body, out),
                Statement::If { then_branch, else_branch, .. } => {
                    walk(then_branch, out);
                    walk(else_branch, out);
                }
                _ => {}
            }
        }
        walk(self, &mut out);
        out
    }
}
