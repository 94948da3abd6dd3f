use std::collections::{BTreeMap, VecDeque};

use super::{parse_proposal, LawProposal, Oracle, OracleContext, OracleError};

/// Plays back a refinement script.
///
/// Lines of the form `@0.1 <law>` are queued for the node at that path, so a
/// node revisited after backtracking receives its next alternative. Other
/// lines form one queue consumed by whichever node asks when its own queue
/// is empty.
#[derive(Clone, Debug, Default)]
pub struct ScriptedOracle {
    keyed: BTreeMap<String, VecDeque<String>>,
    sequential: VecDeque<String>,
}

impl ScriptedOracle {
    pub fn parse(text: &str) -> Result<Self, OracleError> {
        let mut s = ScriptedOracle::default();
        for raw in text.lines() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match line.strip_prefix('@') {
                Some(rest) => {
                    let (path, law) = rest
                        .split_once(char::is_whitespace)
                        .ok_or_else(|| OracleError::Config(format!("`{line}` has no law after the path")))?;
                    s.keyed.entry(path.to_string()).or_default().push_back(law.trim().to_string());
                }
                None => s.sequential.push_back(line.to_string()),
            }
        }
        Ok(s)
    }

    /// Lines not yet handed out.
    pub fn remaining(&self) -> usize {
        self.sequential.len() + self.keyed.values().map(VecDeque::len).sum::<usize>()
    }
}

impl Oracle for ScriptedOracle {
    fn name(&self) -> &str {
        "scripted"
    }

    fn propose(&mut self, ctx: &OracleContext) -> Result<LawProposal, OracleError> {
        let line = match self.keyed.get_mut(&ctx.path).and_then(VecDeque::pop_front) {
            Some(l) => l,
            None => self
                .sequential
                .pop_front()
                .ok_or_else(|| OracleError::Exhausted(format!("no script line left for node {}", ctx.path)))?,
        };
        let mut p = parse_proposal(&line, ctx)?;
        p.rationale = "script".into();
        p.raw = None;
        Ok(p)
    }
}
