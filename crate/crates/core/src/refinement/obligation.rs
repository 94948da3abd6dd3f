use std::fmt;

use crate::spec_lang::{render_spec_expr, SpecExpr, TypedParam, Valuation};

#[derive(Clone, Debug, PartialEq)]
pub enum ObligationStatus {
    Pending,
    Proved { backend: String },
    Refuted { backend: String, counterexample: Valuation },
    Unknown { reason: String },
}

impl ObligationStatus {
    pub fn is_proved(&self) -> bool {
        matches!(self, ObligationStatus::Proved { .. })
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, ObligationStatus::Refuted { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            ObligationStatus::Pending => "pending",
            ObligationStatus::Proved { .. } => "proved",
            ObligationStatus::Refuted { .. } => "refuted",
            ObligationStatus::Unknown { .. } => "unknown",
        }
    }
}

/// An entailment `hypothesis -> conclusion` a law application must establish.
///
/// `env` types every free name; names under `Init` are typed by their stems.
#[derive(Clone, Debug, PartialEq)]
pub struct ProofObligation {
    pub label: String,
    pub hypothesis: SpecExpr,
    pub conclusion: SpecExpr,
    pub env: Vec<TypedParam>,
    pub node: usize,
    pub law: String,
    pub status: ObligationStatus,
}

impl ProofObligation {
    pub fn formula(&self) -> SpecExpr {
        SpecExpr::implies(self.hypothesis.clone(), self.conclusion.clone())
    }

    pub fn render(&self) -> String {
        render_spec_expr(&self.formula())
    }
}

impl fmt::Display for ProofObligation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.label, self.render())
    }
}
