//! Law proposers and the automated refinement loop.
//!
//! An [`Oracle`] looks at one open node and proposes a law. The driver applies
//! it, discharges the obligations and backtracks on failure.

mod driver;
mod heuristic;
mod prompt;
mod remote;
mod scripted;

use std::collections::BTreeMap;

pub use driver::{
    drive_refinement, DriveLimits, DriveOutcome, DriveReport, ObligationCounts, TranscriptEntry,
};
pub use heuristic::HeuristicOracle;
pub use prompt::build_prompt;
pub use remote::{RemoteConfig, RemoteOracle, LLM_KEY_ENV, LLM_URL_ENV};
pub use scripted::ScriptedOracle;

use crate::refinement::{
    parse_law, render_law, Failure, Library, NodeId, RefineError, RefinementLaw, SpecStatement, SpecTree,
};
use crate::verifier::DomainSpec;

/// A library procedure whose specification matches the node.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct LibraryHint {
    pub signature: String,
    /// Script line that would call it here.
    pub call: String,
}

/// Everything an oracle may look at when proposing a law for one node.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleContext {
    pub statement: SpecStatement,
    pub path: String,
    /// Rejected proposals at this node, oldest first.
    pub history: Vec<Failure>,
    pub hints: Vec<LibraryHint>,
    /// Proposals left before the driver gives up on this node.
    pub remaining: usize,
}

impl OracleContext {
    pub fn new(statement: SpecStatement, path: impl Into<String>) -> Self {
        OracleContext { statement, path: path.into(), history: vec![], hints: vec![], remaining: 1 }
    }

    pub fn for_node(tree: &SpecTree, id: NodeId, library: &Library, remaining: usize) -> Result<Self, RefineError> {
        let node = tree.node(id)?;
        let hints = library
            .lookup(&node.stmt)
            .into_iter()
            .map(|m| LibraryHint {
                signature: library.get(&m.entry).map_or_else(|| m.entry.clone(), |e| e.signature()),
                call: render_law(&m.law),
            })
            .collect();
        Ok(OracleContext {
            statement: node.stmt.clone(),
            path: tree.path(id)?,
            history: node.history.clone(),
            hints,
            remaining,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LawProposal {
    pub law: RefinementLaw,
    pub rationale: String,
    /// Reply text the law was read from, when there was one.
    pub raw: Option<String>,
}

impl LawProposal {
    pub fn new(law: RefinementLaw, rationale: impl Into<String>) -> Self {
        LawProposal { law, rationale: rationale.into(), raw: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("no proposal found: {0}")]
    NoProposalFound(String),
    #[error("ill-typed proposal `{line}`: {details}")]
    IllTyped { line: String, details: String },
    #[error("transport error: {message}")]
    Transport { message: String, retryable: bool },
    #[error("oracle exhausted: {0}")]
    Exhausted(String),
    #[error("oracle misconfigured: {0}")]
    Config(String),
}

impl OracleError {
    /// The proposal text to record in the failure history.
    pub fn proposal(&self) -> String {
        match self {
            OracleError::IllTyped { line, .. } => line.clone(),
            _ => "(none)".into(),
        }
    }
}

/// A source of law proposals.
pub trait Oracle: Send {
    fn name(&self) -> &str;
    fn propose(&mut self, ctx: &OracleContext) -> Result<LawProposal, OracleError>;
}

const KEYWORDS: &[&str] = &[
    "skip", "initskip", "seq", "flexseq", "assign", "followassign", "ifelse", "iterate", "traverse", "expand", "call",
];

/// Reads the first script line in `reply` that parses against the context's statement.
///
/// Lines that do not start with a law keyword or do not parse are skipped;
/// a line that parses but fails the type check is an error.
pub fn parse_proposal(reply: &str, ctx: &OracleContext) -> Result<LawProposal, OracleError> {
    let mut malformed = Vec::new();
    for raw in reply.lines() {
        let mut line = raw.trim().trim_matches('`').trim();
        for bullet in ["- ", "* ", "> "] {
            line = line.strip_prefix(bullet).unwrap_or(line).trim();
        }
        if line.starts_with('@') {
            line = line.split_once(char::is_whitespace).map_or("", |(_, rest)| rest.trim());
        }
        let word = line.split_whitespace().next().unwrap_or("").to_ascii_lowercase();
        if !KEYWORDS.contains(&word.as_str()) {
            continue;
        }
        match parse_law(line, &ctx.statement) {
            Ok(law) => {
                return Ok(LawProposal { law, rationale: String::new(), raw: Some(reply.to_string()) });
            }
            Err(e @ (RefineError::IllTyped(_) | RefineError::Mismatch(_))) => {
                return Err(OracleError::IllTyped { line: line.to_string(), details: e.to_string() });
            }
            Err(e) => malformed.push(format!("`{line}`: {e}")),
        }
    }
    Err(OracleError::NoProposalFound(if malformed.is_empty() {
        "the reply contains no law line".into()
    } else {
        malformed.join("; ")
    }))
}

/// Settings the registered oracle constructors draw from.
#[derive(Clone, Debug, Default)]
pub struct OracleConfig {
    /// Refinement script text for the scripted oracle.
    pub script: Option<String>,
    pub remote: RemoteConfig,
    /// Grid the heuristic oracle screens its candidates on.
    pub domains: DomainSpec,
}

pub type OracleFactory = Box<dyn Fn(&OracleConfig) -> Result<Box<dyn Oracle>, OracleError> + Send + Sync>;

/// Oracle constructors by name.
pub struct OracleRegistry {
    factories: BTreeMap<String, OracleFactory>,
}

impl Default for OracleRegistry {
    fn default() -> Self {
        let mut r = OracleRegistry { factories: BTreeMap::new() };
        r.register("scripted", |cfg| {
            let text = cfg
                .script
                .as_deref()
                .ok_or_else(|| OracleError::Config("the scripted oracle needs a script".into()))?;
            Ok(Box::new(ScriptedOracle::parse(text)?))
        });
        r.register("heuristic", |cfg| Ok(Box::new(HeuristicOracle::new(cfg.domains.clone()))));
        r.register("remote", |cfg| Ok(Box::new(RemoteOracle::new(cfg.remote.resolved()?))));
        r
    }
}

impl OracleRegistry {
    pub fn register(
        &mut self,
        name: &str,
        f: impl Fn(&OracleConfig) -> Result<Box<dyn Oracle>, OracleError> + Send + Sync + 'static,
    ) {
        self.factories.insert(name.to_string(), Box::new(f));
    }

    pub fn names(&self) -> Vec<String> {
        self.factories.keys().cloned().collect()
    }

    pub fn build(&self, name: &str, cfg: &OracleConfig) -> Result<Box<dyn Oracle>, OracleError> {
        let f = self.factories.get(name).ok_or_else(|| {
            OracleError::Config(format!("unknown oracle `{name}` (known: {})", self.names().join(", ")))
        })?;
        f(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refinement::parse_spec_file;

    fn sqrt_ctx() -> OracleContext {
        let f = parse_spec_file(
            "name: sqrt\nconstants: (N:float) (e:float)\nvariants: (x:float) (y:float)\n\
             pre: N >= 0 /\\ e > 0\npost: x*x <= N < y*y /\\ y <= x+e\n",
        )
        .unwrap();
        OracleContext::new(f.statement, "0")
    }

    #[test]
    fn proposal_lines() {
        let ctx = sqrt_ctx();
        let p = parse_proposal("assign x := 0, y := N + 1", &ctx).unwrap();
        assert_eq!(render_law(&p.law), "assign x := 0, y := N+1");
        let p = parse_proposal("I would split it.\n```\nseq mid: x*x <= N < y*y\n```", &ctx).unwrap();
        assert_eq!(p.law.keyword(), "seq");
        assert!(matches!(parse_proposal("", &ctx), Err(OracleError::NoProposalFound(_))));
        assert!(matches!(parse_proposal("assign z := 0", &ctx), Err(OracleError::IllTyped { .. })));
        assert!(matches!(parse_proposal("seq", &ctx), Err(OracleError::NoProposalFound(_))));
        let p = parse_proposal("@0 skip", &ctx).unwrap();
        assert_eq!(p.law, RefinementLaw::Skip);
    }

    #[test]
    fn registry_names() {
        let r = OracleRegistry::default();
        assert_eq!(r.names(), ["heuristic", "remote", "scripted"]);
        assert!(matches!(r.build("scripted", &OracleConfig::default()), Err(OracleError::Config(_))));
        assert!(r.build("heuristic", &OracleConfig::default()).is_ok());
        assert!(r.build("psychic", &OracleConfig::default()).is_err());
    }
}
