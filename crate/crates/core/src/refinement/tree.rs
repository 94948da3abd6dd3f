//! The refinement tree: statements, applied laws and their obligations.

use std::collections::BTreeMap;
use std::fmt;

use crate::prog_lang::Statement;

use super::apply::{apply_law, RefinementStep};
use super::law::{render_law, RefinementLaw};
use super::library::{Library, ProcedureEntry};
use super::obligation::ProofObligation;
use super::statement::SpecStatement;
use super::RefineError;

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Open,
    Refined,
    Closed,
    Failed,
}

impl fmt::Display for NodeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeStatus::Open => "open",
            NodeStatus::Refined => "refined",
            NodeStatus::Closed => "closed",
            NodeStatus::Failed => "failed",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub parent: Option<NodeId>,
    pub stmt: SpecStatement,
    pub law: Option<RefinementLaw>,
    pub step: Option<RefinementStep>,
    pub children: Vec<NodeId>,
    /// Rejected proposals, oldest first.
    pub history: Vec<Failure>,
}

/// A rejected proposal and why it was rejected.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Failure {
    pub proposal: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpecTree {
    nodes: BTreeMap<NodeId, Node>,
    next: NodeId,
}

impl SpecTree {
    pub fn new(root: SpecStatement) -> Self {
        let mut nodes = BTreeMap::new();
        nodes.insert(0, Node { id: 0, parent: None, stmt: root, law: None, step: None, children: vec![], history: vec![] });
        SpecTree { nodes, next: 1 }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, RefineError> {
        self.nodes.get(&id).ok_or_else(|| RefineError::NoSuchNode(id.to_string()))
    }

    fn node_mut(&mut self, id: NodeId) -> Result<&mut Node, RefineError> {
        self.nodes.get_mut(&id).ok_or_else(|| RefineError::NoSuchNode(id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Node ids in depth-first, left-to-right order.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![self.root()];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[&id].children.iter().rev());
        }
        out
    }

    /// Dotted position from the root, e.g. `0.1.0`.
    pub fn path(&self, id: NodeId) -> Result<String, RefineError> {
        let mut parts = Vec::new();
        let mut cur = id;
        loop {
            let n = self.node(cur)?;
            match n.parent {
                Some(p) => {
                    let k = self.nodes[&p].children.iter().position(|c| *c == cur).expect("child of parent");
                    parts.push(k.to_string());
                    cur = p;
                }
                None => break,
            }
        }
        parts.push("0".into());
        parts.reverse();
        Ok(parts.join("."))
    }

    pub fn by_path(&self, path: &str) -> Result<NodeId, RefineError> {
        let missing = || RefineError::NoSuchNode(path.to_string());
        let mut parts = path.split('.');
        if parts.next() != Some("0") {
            return Err(missing());
        }
        let mut cur = self.root();
        for p in parts {
            let k: usize = p.parse().map_err(|_| missing())?;
            cur = *self.nodes[&cur].children.get(k).ok_or_else(missing)?;
        }
        Ok(cur)
    }

    pub fn status(&self, id: NodeId) -> NodeStatus {
        let n = &self.nodes[&id];
        let Some(step) = &n.step else { return NodeStatus::Open };
        if step.obligations.iter().any(|o| o.status.is_refuted()) {
            return NodeStatus::Failed;
        }
        let kids: Vec<NodeStatus> = n.children.iter().map(|c| self.status(*c)).collect();
        if kids.contains(&NodeStatus::Failed) {
            NodeStatus::Failed
        } else if step.obligations.iter().all(|o| o.status.is_proved()) && kids.iter().all(|s| *s == NodeStatus::Closed)
        {
            NodeStatus::Closed
        } else {
            NodeStatus::Refined
        }
    }

    pub fn is_closed(&self) -> bool {
        self.status(self.root()) == NodeStatus::Closed
    }

    pub fn open_nodes(&self) -> Vec<NodeId> {
        self.preorder().into_iter().filter(|id| self.nodes[id].step.is_none()).collect()
    }

    pub fn leftmost_open(&self) -> Option<NodeId> {
        self.open_nodes().into_iter().next()
    }

    /// Applies `law` at an open node and returns the new child ids.
    pub fn apply(&mut self, id: NodeId, law: RefinementLaw, library: &Library) -> Result<Vec<NodeId>, RefineError> {
        let n = self.node(id)?;
        if n.step.is_some() {
            return Err(RefineError::NodeNotOpen(self.path(id)?));
        }
        let step = apply_law(&n.stmt, &law, id, library)?;
        let mut ids = Vec::new();
        for child in &step.children {
            let cid = self.next;
            self.next += 1;
            self.nodes.insert(
                cid,
                Node { id: cid, parent: Some(id), stmt: child.clone(), law: None, step: None, children: vec![], history: vec![] },
            );
            ids.push(cid);
        }
        let n = self.node_mut(id)?;
        n.law = Some(law);
        n.step = Some(step);
        n.children = ids.clone();
        Ok(ids)
    }

    /// Undoes the law at `id`, discarding its subtree, and records it as a failure.
    pub fn backtrack(&mut self, id: NodeId, reason: &str) -> Result<(), RefineError> {
        let n = self.node(id)?;
        if n.step.is_none() {
            return Err(RefineError::NotRefined(self.path(id)?));
        }
        let mut stack = n.children.clone();
        while let Some(c) = stack.pop() {
            if let Some(gone) = self.nodes.remove(&c) {
                stack.extend(gone.children);
            }
        }
        let n = self.node_mut(id)?;
        let law = n.law.take().map(|l| render_law(&l)).unwrap_or_default();
        n.step = None;
        n.children.clear();
        n.history.push(Failure { proposal: law, reason: reason.to_string() });
        Ok(())
    }

    /// Records a proposal that was rejected before it could be applied.
    pub fn record_failure(&mut self, id: NodeId, proposal: &str, reason: &str) -> Result<usize, RefineError> {
        let n = self.node_mut(id)?;
        n.history.push(Failure { proposal: proposal.to_string(), reason: reason.to_string() });
        Ok(n.history.len())
    }

    pub fn obligations(&self) -> Vec<&ProofObligation> {
        self.preorder()
            .into_iter()
            .filter_map(|id| self.nodes[&id].step.as_ref())
            .flat_map(|s| s.obligations.iter())
            .collect()
    }

    pub fn obligations_mut(&mut self, id: NodeId) -> Result<&mut Vec<ProofObligation>, RefineError> {
        let path = self.path(id)?;
        match &mut self.node_mut(id)?.step {
            Some(step) => Ok(&mut step.obligations),
            None => Err(RefineError::NotRefined(path)),
        }
    }

    /// Script lines that rebuild this tree, each prefixed with its node path.
    pub fn script(&self) -> Vec<String> {
        self.preorder()
            .into_iter()
            .filter_map(|id| {
                let law = self.nodes[&id].law.as_ref()?;
                Some(format!("@{} {}", self.path(id).ok()?, render_law(law)))
            })
            .collect()
    }

    /// Code of a subtree; `None` while any node below is open.
    pub fn code(&self, id: NodeId) -> Option<Statement> {
        let n = self.nodes.get(&id)?;
        let step = n.step.as_ref()?;
        let kids: Vec<Option<Statement>> = n.children.iter().map(|c| self.code(*c)).collect();
        step.code.instantiate(&kids)
    }

    /// Library procedures called anywhere in the tree, in first-use order.
    pub fn procedures(&self) -> Vec<&ProcedureEntry> {
        let mut out: Vec<&ProcedureEntry> = Vec::new();
        for id in self.preorder() {
            if let Some(p) = self.nodes[&id].step.as_ref().and_then(|s| s.procedure.as_ref()) {
                if !out.iter().any(|q| q.name == p.name) {
                    out.push(p);
                }
            }
        }
        out
    }

    /// The whole program, with definitions of called procedures first.
    pub fn extract_program(&self) -> Option<Statement> {
        let body = self.code(self.root())?;
        let defs = self.procedures().into_iter().map(|p| Statement::ProcDef {
            name: p.name.clone(),
            params: p.params.iter().map(|q| (q.name.clone(), q.ty.clone())).collect(),
            body: Box::new(p.program.clone()),
        });
        Some(Statement::seq(defs.chain([body])))
    }

    /// A library entry for this refinement; the tree must be closed.
    pub fn to_entry(&self, name: &str) -> Result<ProcedureEntry, RefineError> {
        if !self.is_closed() {
            return Err(RefineError::NotClosed);
        }
        let root = &self.nodes[&self.root()].stmt;
        Ok(ProcedureEntry {
            name: name.to_string(),
            params: root.constants.clone(),
            frame: root.frame.clone(),
            pre: root.pre.clone(),
            post: root.post.clone(),
            program: self.extract_program().ok_or(RefineError::NotClosed)?,
            provenance: self.script(),
        })
    }
}
