//! The program language: syntax, printing, interpretation and lifting
//! into formulas.

mod ast;
mod interp;
mod lift;
mod parse;
mod render;
mod testcases;

pub use ast::{CmpOp, ProgExpr, Statement, Target};
pub use interp::{interpret, round_binary64, NumMode, RunError, RunOutcome, RunStatus, DEFAULT_STEP_LIMIT};
pub use lift::{prog_expr_to_spec, spec_to_prog_expr};
pub use parse::{parse_prog_expr, parse_program, ProgParseError};
pub use render::{render_prog_expr, render_program};
pub use testcases::{
    parse_test_cases, render_test_cases, run_tests, CaseResult, StateCarriers, TestCase, TestFileError,
    TestReport,
};
