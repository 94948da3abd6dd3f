use crate::prog_lang::{ProgExpr, Statement};

/// A code fragment with holes for the code of child statements.
#[derive(Clone, Debug, PartialEq)]
pub enum CodeTemplate {
    Child(usize),
    Stmt(Statement),
    Seq(Vec<CodeTemplate>),
    While { cond: ProgExpr, body: Box<CodeTemplate> },
    If { cond: ProgExpr, then_branch: Box<CodeTemplate>, else_branch: Box<CodeTemplate> },
}

impl CodeTemplate {
    /// Fills holes with `children`; `None` when a hole has no code yet.
    pub fn instantiate(&self, children: &[Option<Statement>]) -> Option<Statement> {
        Some(match self {
            CodeTemplate::Child(k) => children.get(*k)?.clone()?,
            CodeTemplate::Stmt(s) => s.clone(),
            CodeTemplate::Seq(items) => {
                Statement::seq(items.iter().map(|i| i.instantiate(children)).collect::<Option<Vec<_>>>()?)
            }
            CodeTemplate::While { cond, body } => {
                Statement::While { cond: cond.clone(), body: Box::new(body.instantiate(children)?) }
            }
            CodeTemplate::If { cond, then_branch, else_branch } => Statement::If {
                cond: cond.clone(),
                then_branch: Box::new(then_branch.instantiate(children)?),
                else_branch: Box::new(else_branch.instantiate(children)?),
            },
        })
    }

    /// Rendering with holes shown as `{child k}` comments.
    pub fn render(&self) -> String {
        let holes: Vec<Option<Statement>> = (0..self.holes())
            .map(|k| {
                Some(Statement::Call { name: format!("__child{k}"), args: Vec::new() })
            })
            .collect();
        let text = crate::prog_lang::render_program(&self.instantiate(&holes).expect("all holes filled"));
        let mut out = text;
        for k in 0..holes.len() {
            out = out.replace(&format!("__child{k}()"), &format!("# child {k}"));
        }
        out
    }

    fn holes(&self) -> usize {
        match self {
            CodeTemplate::Child(k) => k + 1,
            CodeTemplate::Stmt(_) => 0,
            CodeTemplate::Seq(items) => items.iter().map(CodeTemplate::holes).max().unwrap_or(0),
            CodeTemplate::While { body, .. } => body.holes(),
            CodeTemplate::If { then_branch, else_branch, .. } => then_branch.holes().max(else_branch.holes()),
        }
    }
}
