//! Variable elimination as let-term rewriting: the five rewrite rules, the
//! deterministic strategy built from them, traces, and size accounting.

mod alpha;
mod rules;
mod simplify;
mod strategy;
mod trace;

use thiserror::Error;

use crate::ast::LetTerm;
use crate::factor::{facts, names, FactorError};

pub use alpha::alpha_eq;
pub use rules::{apply_rule, sd_rule, Rule};
pub use simplify::{simplify, simplify_expr};
pub use strategy::{sd, va, vel, vel_seq, vel_traced};
pub use trace::{term_digest, RewriteStep, Trace, TraceRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewriteError {
    #[error("{rule} does not apply at definition {position}: {reason}")]
    SideConditionViolated {
        rule: String,
        position: usize,
        reason: String,
    },
    #[error("at least two definitions are needed")]
    TooFewDefinitions,
    #[error("{what} is not positive")]
    NotPositive { what: String },
    #[error("variables {vars} occur in the output")]
    OutputOverlap { vars: String },
    #[error("variables {vars} are not free in the term")]
    NotFree { vars: String },
    #[error("`{name}` is not defined by the term")]
    NotDefined { name: String },
    #[error("`{name}` is in the output and cannot be eliminated")]
    InOutput { name: String },
    #[error("`{name}` is unused and alone in its pattern; eliminating it would leave an empty pattern")]
    NotEliminable { name: String },
    #[error("top-level binders must be pairwise distinct and distinct from free variables; canonicalize the term first")]
    NotCanonicalized,
    #[error(transparent)]
    Factor(#[from] FactorError),
}

impl RewriteError {
    pub fn is_web_cap(&self) -> bool {
        matches!(self, RewriteError::Factor(e) if e.is_web_cap())
    }
}

/// Both sides of the size bound for eliminating `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct SizeBound {
    pub before: usize,
    pub after: usize,
    /// `|vars(Facts(L)_x) \ FV(L)|`.
    pub degree: usize,
}

impl SizeBound {
    pub fn limit(&self) -> usize {
        self.before + 4 * self.degree
    }

    pub fn holds(&self) -> bool {
        self.after <= self.limit()
    }
}

pub fn size_bound(term: &LetTerm, x: &str) -> Result<SizeBound, RewriteError> {
    let after = vel(term, x)?;
    let set = facts(term)?;
    let fv = names(&term.free_vars());
    let (with, _) = set.partition(&[x.to_string()].into());
    let vars: std::collections::BTreeSet<String> = with.iter().flat_map(|f| f.names()).collect();
    Ok(SizeBound {
        before: term.size(),
        after: after.size(),
        degree: vars.difference(&fv).count(),
    })
}

/// `size(vel(L, x)) ≤ size(L) + 4·|vars(Facts(L)_x) \ FV(L)|`.
pub fn size_bound_check(term: &LetTerm, x: &str) -> Result<bool, RewriteError> {
    size_bound(term, x).map(|b| b.holds())
}
