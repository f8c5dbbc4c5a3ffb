//! Typed syntax of the calculus: types, variables, patterns, expressions and
//! let-terms, with type checking, free variables, size and binder renaming.

mod expr;
mod names;
mod typecheck;
mod types;

use thiserror::Error;

pub use expr::{Definition, Expr, LetTerm, StochasticMatrix, VarSet, ROW_SUM_TOL};
pub use names::{canonicalize, has_distinct_binders, is_canonical, split_suffix, FreshNames};
pub use typecheck::{check_consistent_types, check_pattern, typecheck, typecheck_expr};
pub use types::{Pattern, Type, Variable};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AstError {
    #[error("arrow variable `{var}` is free in both premises of a binary rule")]
    ArrowSharing { var: String },
    #[error("let binds arrow variable `{var}` which its body never uses")]
    UnusedArrowBinder { var: String },
    #[error("pattern `{pattern}` has type {pattern_ty} but is bound to an expression of type {expr_ty}")]
    PatternTypeMismatch {
        pattern: String,
        pattern_ty: Type,
        expr_ty: Type,
    },
    #[error("`{head}` expects arguments of type {expected}, got {found}")]
    ApplicationMismatch {
        head: String,
        expected: String,
        found: String,
    },
    #[error("lambda parameter `{pattern}` is not a positive pattern")]
    NonPositiveLamParam { pattern: String },
    #[error("left component of a pair has non-positive type {ty}")]
    NonPositiveLeft { ty: Type },
    #[error("variable `{var}` occurs twice in one pattern")]
    DuplicatePatternVariable { var: String },
    #[error("pattern `{pattern}` has an arrow variable outside the rightmost position")]
    MalformedPattern { pattern: String },
    #[error("variable `{var}` is used with types {first} and {second}")]
    InconsistentVariableType {
        var: String,
        first: Type,
        second: Type,
    },
    #[error("variable `{var}` has type {ty}, which is neither positive nor an arrow")]
    IllFormedVariableType { var: String, ty: Type },
    #[error("matrix `{matrix}` has non-positive slot or output type {ty}")]
    NonPositiveMatrixType { matrix: String, ty: Type },
    #[error("matrix `{matrix}` needs {expected} entries, found {found}")]
    MatrixShape {
        matrix: String,
        expected: usize,
        found: usize,
    },
    #[error("matrix `{matrix}` has invalid entry {value}")]
    NegativeEntry { matrix: String, value: f64 },
    #[error("row {row} of matrix `{matrix}` sums to {sum}, not 1")]
    NotStochastic { matrix: String, row: usize, sum: f64 },
}
