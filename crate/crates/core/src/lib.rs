//! Program refinement workbench.
//!
//! Specification statements `w: [pre, post]` are refined into executable
//! programs by applying refinement laws. Each law application yields child
//! statements, a code fragment and proof obligations, which are discharged by
//! a bounded exhaustive checker or an external SMT solver. Law choices come
//! from a pluggable oracle (scripted, heuristic or a remote language model).

pub mod prog_lang;
pub mod refinement;
pub mod verifier;
pub mod spec_lang;
pub mod oracle;
pub mod harness;
