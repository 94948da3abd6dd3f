//! Interactive refinement sessions with an append-only event log.

use std::sync::{Arc, Mutex};

use refinery_core::oracle::{LawProposal, Oracle, OracleContext};
use refinery_core::prog_lang::render_program;
use refinery_core::refinement::{
    parse_law, parse_spec_file, render_law, Library, NodeId, ObligationStatus, RefineError, RefinementLaw, SpecStatement,
    SpecTree,
};
use refinery_core::verifier::Verifier;
use serde::Serialize;

use crate::view::ObligationView;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("{0}")]
    NotFound(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Invalid(String),
    #[error("oracle: {0}")]
    Oracle(String),
}

impl From<RefineError> for SessionError {
    fn from(e: RefineError) -> Self {
        match e {
            RefineError::NoSuchNode(_) => SessionError::NotFound(e.to_string()),
            RefineError::NodeNotOpen(_) | RefineError::NotRefined(_) | RefineError::NotClosed => {
                SessionError::Conflict(e.to_string())
            }
            other => SessionError::Invalid(other.to_string()),
        }
    }
}

/// A change to the tree. Replaying the log from the root statement rebuilds it.
#[derive(Clone, Debug, PartialEq)]
pub enum Event {
    Applied { path: String, law: RefinementLaw },
    Verified { path: String, statuses: Vec<ObligationStatus> },
    Backtracked { path: String, reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventView {
    pub seq: usize,
    pub kind: &'static str,
    pub path: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub law: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub statuses: Vec<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Event {
    pub fn view(&self, seq: usize) -> EventView {
        let mut v = EventView { seq, kind: "", path: String::new(), law: None, statuses: vec![], reason: None };
        match self {
            Event::Applied { path, law } => {
                v.kind = "applied";
                v.path = path.clone();
                v.law = Some(render_law(law));
            }
            Event::Verified { path, statuses } => {
                v.kind = "verified";
                v.path = path.clone();
                v.statuses = statuses.iter().map(ObligationStatus::label).collect();
            }
            Event::Backtracked { path, reason } => {
                v.kind = "backtracked";
                v.path = path.clone();
                v.reason = Some(reason.clone());
            }
        }
        v
    }
}

pub struct Session {
    pub id: String,
    pub name: String,
    root: SpecStatement,
    tree: SpecTree,
    library: Library,
    verifier: Arc<Verifier>,
    oracle: Mutex<Box<dyn Oracle>>,
    k: usize,
    events: Vec<Event>,
}

impl Session {
    pub fn new(
        id: String,
        spec_text: &str,
        verifier: Arc<Verifier>,
        oracle: Box<dyn Oracle>,
        library: Library,
        k: usize,
    ) -> Result<Self, SessionError> {
        let spec = parse_spec_file(spec_text).map_err(|e| SessionError::Invalid(e.to_string()))?;
        Ok(Session {
            id,
            name: spec.name,
            tree: SpecTree::new(spec.statement.clone()),
            root: spec.statement,
            library,
            verifier,
            oracle: Mutex::new(oracle),
            k,
            events: Vec::new(),
        })
    }

    pub fn tree(&self) -> &SpecTree {
        &self.tree
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn oracle_name(&self) -> String {
        self.oracle.lock().expect("oracle lock").name().to_string()
    }

    fn node(&self, path: &str) -> Result<NodeId, SessionError> {
        Ok(self.tree.by_path(path)?)
    }

    /// Applies a refinement-script line at an open node; returns the child paths.
    pub fn apply(&mut self, path: &str, line: &str) -> Result<Vec<String>, SessionError> {
        let id = self.node(path)?;
        let node = self.tree.node(id)?;
        if node.step.is_some() {
            return Err(RefineError::NodeNotOpen(path.to_string()).into());
        }
        let law = parse_law(line, &node.stmt)?;
        let kids = self.tree.apply(id, law.clone(), &self.library)?;
        self.events.push(Event::Applied { path: path.to_string(), law });
        Ok(kids.iter().map(|c| self.tree.path(*c).expect("new child")).collect())
    }

    /// Discharges the obligations of a refined node.
    pub fn verify(&mut self, path: &str) -> Result<Vec<ObligationView>, SessionError> {
        let id = self.node(path)?;
        let obs = self.tree.obligations_mut(id)?;
        self.verifier.check_all(obs);
        let views = obs.iter().map(ObligationView::of).collect();
        let statuses = obs.iter().map(|o| o.status.clone()).collect();
        self.events.push(Event::Verified { path: path.to_string(), statuses });
        Ok(views)
    }

    pub fn backtrack(&mut self, path: &str, reason: &str) -> Result<(), SessionError> {
        let id = self.node(path)?;
        self.tree.backtrack(id, reason)?;
        self.events.push(Event::Backtracked { path: path.to_string(), reason: reason.to_string() });
        Ok(())
    }

    /// Asks the oracle for a law at an open node without applying it.
    pub fn suggest(&self, path: &str) -> Result<LawProposal, SessionError> {
        let id = self.node(path)?;
        let node = self.tree.node(id)?;
        if node.step.is_some() {
            return Err(RefineError::NodeNotOpen(path.to_string()).into());
        }
        let remaining = self.k.saturating_sub(node.history.len()).max(1);
        let ctx = OracleContext::for_node(&self.tree, id, &self.library, remaining)?;
        let mut oracle = self.oracle.lock().expect("oracle lock");
        oracle.propose(&ctx).map_err(|e| SessionError::Oracle(e.to_string()))
    }

    /// The extracted program of a closed tree.
    pub fn program(&self) -> Result<String, SessionError> {
        if !self.tree.is_closed() {
            return Err(RefineError::NotClosed.into());
        }
        let p = self.tree.extract_program().ok_or(RefineError::NotClosed)?;
        Ok(render_program(&p))
    }

    /// Rebuilds the tree from the root statement and the event log.
    pub fn replay(&self) -> Result<SpecTree, SessionError> {
        replay_events(&self.root, &self.events, &self.library)
    }
}

pub fn replay_events(root: &SpecStatement, events: &[Event], library: &Library) -> Result<SpecTree, SessionError> {
    let mut tree = SpecTree::new(root.clone());
    for e in events {
        match e {
            Event::Applied { path, law } => {
                tree.apply(tree.by_path(path)?, law.clone(), library)?;
            }
            Event::Verified { path, statuses } => {
                let obs = tree.obligations_mut(tree.by_path(path)?)?;
                for (ob, s) in obs.iter_mut().zip(statuses) {
                    ob.status = s.clone();
                }
            }
            Event::Backtracked { path, reason } => tree.backtrack(tree.by_path(path)?, reason)?,
        }
    }
    Ok(tree)
}

/// Applies a script to a tree, line by line.
///
/// A line may name its node as `@path law`; otherwise it refines the
/// leftmost open node. Errors carry the 1-based line number.
pub fn replay_script(tree: &mut SpecTree, text: &str, library: &Library) -> Result<usize, (usize, String)> {
    let mut applied = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |m: String| (k + 1, m);
        let (id, law_text) = match line.strip_prefix('@') {
            Some(rest) => {
                let (path, law) = rest.split_once(char::is_whitespace).ok_or_else(|| err("missing law".into()))?;
                (tree.by_path(path).map_err(|e| err(e.to_string()))?, law.trim())
            }
            None => (tree.leftmost_open().ok_or_else(|| err("no open node left".into()))?, line),
        };
        let stmt = tree.node(id).map_err(|e| err(e.to_string()))?.stmt.clone();
        let law = parse_law(law_text, &stmt).map_err(|e| err(e.to_string()))?;
        tree.apply(id, law, library).map_err(|e| err(e.to_string()))?;
        applied += 1;
    }
    Ok(applied)
}
