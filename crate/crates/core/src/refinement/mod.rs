//! Specification statements, refinement laws and the refinement tree.

mod apply;
mod code;
mod law;
mod library;
mod obligation;
mod statement;
mod tree;

pub use apply::{apply_law, assignment_code, lift_bindings, negate, RefinementStep};
pub use code::CodeTemplate;
pub use law::{check_law, parse_law, render_law, IterMode, LawDescription, RefinementLaw, LAW_CATALOG};
pub use library::{match_pattern, Library, LibraryMatch, ProcedureEntry};
pub use obligation::{ObligationStatus, ProofObligation};
pub use statement::{
    inline_definitions, parse_spec_file, render_spec_file, Definition, SpecFile, SpecFileError, SpecStatement,
};
pub use tree::{Failure, Node, NodeId, NodeStatus, SpecTree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RefineError {
    #[error("unknown law `{0}`")]
    UnknownLaw(String),
    #[error("malformed law: {0}")]
    Malformed(String),
    #[error("ill-typed: {0}")]
    IllTyped(String),
    #[error("law does not apply: {0}")]
    Mismatch(String),
    #[error("no node {0}")]
    NoSuchNode(String),
    #[error("node {0} is not open")]
    NodeNotOpen(String),
    #[error("node {0} has no law applied")]
    NotRefined(String),
    #[error("the refinement is not closed")]
    NotClosed,
    #[error("library already has `{0}`")]
    Duplicate(String),
    #[error("{0}")]
    Io(String),
}
