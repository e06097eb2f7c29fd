//! Text definitions of perturbed systems: an expression language for
//! scalar and vector fields, and a sectioned `key = value` config format.

mod config;
mod expr;

use thiserror::Error;

pub use config::{load_config, model_variables, parse_config, scalar_field, vector_field, SweepSpec, SystemConfig};
pub use expr::{eval_expr, is_variable_name, parse_expr, BinOp, CompiledExpr, Evaluation, Expr, Func};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum DslError {
    #[error("syntax error at {line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },

    #[error("unknown identifier `{name}` at {line}:{col}")]
    UnknownIdentifier { name: String, line: usize, col: usize },

    #[error("unbound variable `{name}`")]
    UnboundVariable { name: String },
}
