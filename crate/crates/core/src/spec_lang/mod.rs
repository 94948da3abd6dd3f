//! The specification language: typed first-order formulas over rationals and arrays.

mod eval;
mod expr;
mod parse;
mod render;
mod subst;
mod typecheck;
mod types;
mod value;

pub use eval::{eval_bool, eval_spec, EvalError};
pub use expr::{ArithOp, Quantifier, RelOp, SpecExpr};
pub use parse::{parse_params, parse_spec_expr, parse_spec_expr_untyped, parse_spec_type, SpecParseError};
pub use render::{render_rational, render_spec_expr};
pub use subst::{fresh_name, instantiate, substitute, SubstError};
pub use typecheck::{type_check, TypeError};
pub use types::{is_constant_name, ParamKind, SpecType, TypedParam};
pub use value::{parse_rational, Carriers, Valuation, Value, ValueParseError};

/// Exact rational numbers used throughout specifications and verification.
pub type Rational = num_rational::BigRational;

/// Free names of `e`, bound names excluded.
pub fn free_vars(e: &SpecExpr) -> std::collections::BTreeSet<String> {
    e.free_vars()
}
