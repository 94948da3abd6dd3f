//! Command-line and HTTP front ends for the refinery engine.

pub mod commands;
pub mod config;
pub mod corpus;
pub mod server;
pub mod session;
pub mod view;

use std::path::Path;

use refinery_core::verifier::{Verifier, VerifierConfig};

pub use config::Config;

pub const EXIT_OK: i32 = 0;
/// Unreadable or unparsable input.
pub const EXIT_INPUT: i32 = 1;
/// The refinement did not close, or obligations are not all proved.
pub const EXIT_UNPROVED: i32 = 2;
/// An explicitly configured solver cannot be run.
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_TESTS: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("solver: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

pub(crate) fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub(crate) fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Builds the portfolio verifier.
///
/// When the SMT backend is requested but the solver does not answer, an
/// explicitly configured solver is an error; the default one is dropped in
/// favour of the bounded checker.
pub fn build_verifier(config: VerifierConfig) -> Result<Verifier, CliError> {
    let v = Verifier::new(config).map_err(CliError::Input)?;
    if !v.config.backends.iter().any(|b| b == "smt") {
        return Ok(v);
    }
    let Err(e) = v.probe_solver() else { return Ok(v) };
    if v.config.solver_explicit() {
        return Err(CliError::Solver(format!("`{}` does not answer: {e}", v.config.solver_command())));
    }
    log::warn!("no SMT solver available ({e}); using the bounded checker only");
    let mut config = v.config;
    config.backends.retain(|b| b != "smt");
    if config.backends.is_empty() {
        config.backends.push("bounded".into());
    }
    Verifier::new(config).map_err(CliError::Input)
}
