//! Concrete syntax, Bayesian-network ingestion, pretty printing and the
//! reports behind the command-line tool.

mod network;
mod parser;
pub mod pretty;
pub mod report;

use thiserror::Error;

use crate::ast::AstError;

pub use network::{ingest_network, Cpt, NetworkFile, NetworkNode, NetworkVariable};
pub use parser::{parse, SourceProgram};
pub use pretty::{expr_to_string, pattern_to_string, program_to_string, term_to_string};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontendError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("undeclared matrix `{name}` at {line}:{col}")]
    UndeclaredMatrix { name: String, line: usize, col: usize },
    #[error("undeclared arrow variable `{name}` at {line}:{col} (declare it with `var {name} : T -o U;`)")]
    UndeclaredArrowVariable { name: String, line: usize, col: usize },
    #[error("matrix declared at {line}:{col}: {source}")]
    Matrix {
        line: usize,
        col: usize,
        source: AstError,
    },
    #[error("invalid network file: {0}")]
    Json(String),
    #[error("network has a cycle through: {nodes}")]
    CyclicNetwork { nodes: String },
    #[error("CPT of node `{node}` must have {expected_rows} rows of 2 entries")]
    CptShapeMismatch { node: String, expected_rows: usize },
    #[error("query variable `{name}` is not a network variable")]
    UnknownQueryVariable { name: String },
    #[error("query is empty")]
    EmptyQuery,
    #[error("unknown network variable `{name}`")]
    UnknownNetworkVariable { name: String },
    #[error("`{name}` is listed twice")]
    DuplicateNetworkEntry { name: String },
    #[error("variable `{name}` has no node")]
    MissingNode { name: String },
    #[error("variable `{name}` has {states} states; only 2 are supported")]
    UnsupportedStates { name: String, states: usize },
}
