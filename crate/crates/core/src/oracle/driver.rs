use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use crate::refinement::{render_law, Library, ObligationStatus, ProofObligation, SpecTree};
use crate::verifier::Verifier;

use super::{build_prompt, Oracle, OracleContext};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DriveLimits {
    /// Failed proposals a node may collect before its parent is backtracked.
    pub k: usize,
    pub max_proposals: usize,
    pub max_nodes: usize,
    /// Keep refinements whose obligations come back Unknown.
    pub accept_unknown: bool,
}

impl Default for DriveLimits {
    fn default() -> Self {
        DriveLimits { k: 3, max_proposals: 200, max_nodes: 1000, accept_unknown: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveOutcome {
    /// The root is closed: every obligation in the tree is proved.
    FullyRefined,
    /// Every node is refined but some obligations were accepted as Unknown.
    Unverified,
    Exhausted,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct ObligationCounts {
    pub proved: usize,
    pub refuted: usize,
    pub unknown: usize,
}

impl ObligationCounts {
    fn add(&mut self, s: &ObligationStatus) {
        match s {
            ObligationStatus::Proved { .. } => self.proved += 1,
            ObligationStatus::Refuted { .. } => self.refuted += 1,
            ObligationStatus::Unknown { .. } | ObligationStatus::Pending => self.unknown += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.proved + self.refuted + self.unknown
    }
}

/// One exchange with the oracle.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct TranscriptEntry {
    pub attempt: usize,
    pub path: String,
    pub oracle: String,
    pub prompt: String,
    pub reply: Option<String>,
    pub proposal: Option<String>,
    pub outcome: String,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DriveReport {
    pub outcome: DriveOutcome,
    pub reason: Option<String>,
    pub proposals: usize,
    pub failures: usize,
    /// Proposals made at each node path.
    pub attempts: BTreeMap<String, usize>,
    pub parent_backtracks: usize,
    /// Verdicts over every obligation checked, rejected attempts included.
    pub checked: ObligationCounts,
    /// Verdicts over the obligations of the final tree.
    pub final_obligations: ObligationCounts,
    #[serde(skip)]
    pub elapsed: Duration,
    #[serde(skip)]
    pub transcript: Vec<TranscriptEntry>,
}

impl DriveReport {
    pub fn transcript_jsonl(&self) -> String {
        self.transcript
            .iter()
            .map(|e| serde_json::to_string(e).expect("plain data serializes") + "\n")
            .collect()
    }
}

fn describe(ob: &ProofObligation) -> String {
    match &ob.status {
        ObligationStatus::Refuted { backend, counterexample } => {
            format!("[{}] {} refuted by {backend}; counterexample: {counterexample}", ob.label, ob.render())
        }
        ObligationStatus::Unknown { reason } => format!("[{}] {} unknown: {reason}", ob.label, ob.render()),
        other => format!("[{}] {}", ob.label, other.label()),
    }
}

/// Refines the leftmost open node until the tree closes or the budget runs out.
///
/// A rejected proposal is recorded in the node's history. A node with `k`
/// recorded failures gets its parent backtracked, which may cascade upwards;
/// `k` failures at the root end the run.
pub fn drive_refinement(
    tree: &mut SpecTree,
    oracle: &mut dyn Oracle,
    verifier: &Verifier,
    library: &Library,
    limits: &DriveLimits,
) -> DriveReport {
    let start = Instant::now();
    let mut r = DriveReport {
        outcome: DriveOutcome::Exhausted,
        reason: None,
        proposals: 0,
        failures: 0,
        attempts: BTreeMap::new(),
        parent_backtracks: 0,
        checked: ObligationCounts::default(),
        final_obligations: ObligationCounts::default(),
        elapsed: Duration::ZERO,
        transcript: Vec::new(),
    };
    loop {
        let Some(id) = tree.leftmost_open() else {
            r.outcome = if tree.is_closed() { DriveOutcome::FullyRefined } else { DriveOutcome::Unverified };
            break;
        };
        if r.proposals >= limits.max_proposals {
            r.reason = Some(format!("proposal budget of {} spent", limits.max_proposals));
            break;
        }
        if tree.len() >= limits.max_nodes {
            r.reason = Some(format!("tree reached {} nodes", limits.max_nodes));
            break;
        }
        let path = tree.path(id).expect("open node exists");
        let used = tree.node(id).expect("open node exists").history.len();
        let ctx = OracleContext::for_node(tree, id, library, limits.k.saturating_sub(used)).expect("open node exists");
        r.proposals += 1;
        *r.attempts.entry(path.clone()).or_default() += 1;
        let mut entry = TranscriptEntry {
            attempt: r.proposals,
            path: path.clone(),
            oracle: oracle.name().to_string(),
            prompt: build_prompt(&ctx),
            reply: None,
            proposal: None,
            outcome: String::new(),
        };
        let rejection = match oracle.propose(&ctx) {
            Err(e) => {
                tree.record_failure(id, &e.proposal(), &e.to_string()).expect("open node exists");
                Some(e.to_string())
            }
            Ok(p) => {
                let line = render_law(&p.law);
                entry.reply = p.raw.clone();
                entry.proposal = Some(line.clone());
                match tree.apply(id, p.law, library) {
                    Err(e) => {
                        tree.record_failure(id, &line, &e.to_string()).expect("open node exists");
                        Some(e.to_string())
                    }
                    Ok(_) => {
                        let obs = tree.obligations_mut(id).expect("just refined");
                        verifier.check_all(obs);
                        let mut bad = Vec::new();
                        for ob in obs.iter() {
                            r.checked.add(&ob.status);
                            let unknown = matches!(ob.status, ObligationStatus::Unknown { .. });
                            if ob.status.is_refuted() || (unknown && !limits.accept_unknown) {
                                bad.push(describe(ob));
                            }
                        }
                        if bad.is_empty() {
                            None
                        } else {
                            let reason = bad.join("; ");
                            tree.backtrack(id, &reason).expect("just refined");
                            Some(reason)
                        }
                    }
                }
            }
        };
        entry.outcome = match &rejection {
            None => "accepted".into(),
            Some(reason) => format!("rejected: {reason}"),
        };
        log::debug!("{} @{} {}", entry.attempt, entry.path, entry.outcome);
        r.transcript.push(entry);
        if rejection.is_none() {
            continue;
        }
        r.failures += 1;
        let mut cur = id;
        while tree.node(cur).expect("live node").history.len() >= limits.k {
            let Some(parent) = tree.node(cur).expect("live node").parent else {
                r.reason = Some(format!("{} failed proposals at the root", limits.k));
                r.elapsed = start.elapsed();
                r.final_obligations = final_counts(tree);
                return r;
            };
            let at = tree.path(cur).expect("live node");
            tree.backtrack(parent, &format!("{} failed proposals at node {at}", limits.k)).expect("parent is refined");
            r.parent_backtracks += 1;
            cur = parent;
        }
    }
    r.final_obligations = final_counts(tree);
    r.elapsed = start.elapsed();
    r
}

fn final_counts(tree: &SpecTree) -> ObligationCounts {
    let mut c = ObligationCounts::default();
    for ob in tree.obligations() {
        c.add(&ob.status);
    }
    c
}
