//! Serializable and printable views of a refinement tree.

use std::fmt::Write;

use refinery_core::refinement::{render_law, Failure, NodeId, NodeStatus, ObligationStatus, ProofObligation, SpecTree};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObligationView {
    pub label: String,
    pub formula: String,
    pub status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl ObligationView {
    pub fn of(ob: &ProofObligation) -> Self {
        let (backend, counterexample, reason) = match &ob.status {
            ObligationStatus::Pending => (None, None, None),
            ObligationStatus::Proved { backend } => (Some(backend.clone()), None, None),
            ObligationStatus::Refuted { backend, counterexample } => {
                (Some(backend.clone()), Some(counterexample.to_string()), None)
            }
            ObligationStatus::Unknown { reason } => (None, None, Some(reason.clone())),
        };
        ObligationView {
            label: ob.label.clone(),
            formula: ob.render(),
            status: ob.status.label(),
            backend,
            counterexample,
            reason,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeView {
    pub path: String,
    pub status: NodeStatus,
    pub statement: String,
    pub law: Option<String>,
    pub children: Vec<String>,
    pub obligations: Vec<ObligationView>,
    pub history: Vec<Failure>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeView {
    pub status: NodeStatus,
    pub closed: bool,
    /// Open node paths, leftmost first.
    pub open: Vec<String>,
    pub nodes: Vec<NodeView>,
}

pub fn node_view(tree: &SpecTree, id: NodeId) -> NodeView {
    let n = tree.node(id).expect("live node");
    let path = |c: &NodeId| tree.path(*c).expect("live node");
    NodeView {
        path: path(&id),
        status: tree.status(id),
        statement: n.stmt.render(),
        law: n.law.as_ref().map(render_law),
        children: n.children.iter().map(path).collect(),
        obligations: n.step.iter().flat_map(|s| &s.obligations).map(ObligationView::of).collect(),
        history: n.history.clone(),
    }
}

pub fn tree_view(tree: &SpecTree) -> TreeView {
    TreeView {
        status: tree.status(tree.root()),
        closed: tree.is_closed(),
        open: tree.open_nodes().iter().map(|id| tree.path(*id).expect("live node")).collect(),
        nodes: tree.preorder().into_iter().map(|id| node_view(tree, id)).collect(),
    }
}

/// One block per refined node: the law, then each obligation and its verdict.
pub fn obligation_report(tree: &SpecTree) -> String {
    let mut out = String::new();
    let (mut proved, mut total) = (0, 0);
    for id in tree.preorder() {
        let v = node_view(tree, id);
        let Some(law) = &v.law else {
            let _ = writeln!(out, "@{} open: {}", v.path, v.statement);
            continue;
        };
        let _ = writeln!(out, "@{} {law}", v.path);
        for ob in &v.obligations {
            total += 1;
            let by = ob.backend.as_deref().map(|b| format!(" by {b}")).unwrap_or_default();
            let _ = writeln!(out, "  [{}] {}{by}: {}", ob.label, ob.status, ob.formula);
            match (&ob.counterexample, &ob.reason) {
                (Some(cex), _) => {
                    let _ = writeln!(out, "    counterexample: {cex}");
                }
                (_, Some(r)) => {
                    let _ = writeln!(out, "    reason: {r}");
                }
                _ => {}
            }
            proved += usize::from(ob.status == "proved");
        }
    }
    let _ = writeln!(out, "{proved}/{total} obligations proved");
    out
}
