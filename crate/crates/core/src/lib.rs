//! A linear let-calculus for discrete Bayesian inference.
//!
//! Let-terms describe Bayesian networks and queries. This crate gives them a
//! weighted-relational semantics ([`denote`]), extracts factor sets from
//! them and runs classical variable elimination on those ([`factor`]), and
//! performs variable elimination directly as term rewriting ([`rewrite`]).
//! [`verify`] cross-checks all of these on random networks.

pub mod ast;
pub mod denote;
pub mod factor;
pub mod frontend;
pub mod rewrite;
pub mod verify;
