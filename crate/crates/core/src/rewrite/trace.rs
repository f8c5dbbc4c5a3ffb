use std::fmt::Write;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::rules::Rule;
use crate::ast::LetTerm;

/// One rule application.
#[derive(Clone, Debug, PartialEq)]
pub struct RewriteStep {
    pub rule: Rule,
    /// Index of the first definition the rule touched.
    pub position: usize,
    pub before: LetTerm,
    pub after: LetTerm,
}

/// Hex SHA-256 of a term's printed form.
pub fn term_digest(term: &LetTerm) -> String {
    let mut s = String::with_capacity(64);
    for b in Sha256::digest(term.to_string().as_bytes()).iter() {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// A derivation: the initial term, the steps, and the final term.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub initial: LetTerm,
    pub steps: Vec<RewriteStep>,
    /// Number of steps spent on each eliminated variable, in order.
    pub per_var: Vec<usize>,
    pub final_term: LetTerm,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub rule: String,
    pub position: usize,
    pub term: String,
    pub digest: String,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn rules(&self) -> Vec<Rule> {
        self.steps.iter().map(|s| s.rule.clone()).collect()
    }

    /// Steps chain: each step starts where the previous one ended.
    pub fn is_chained(&self) -> bool {
        let mut cur = &self.initial;
        for s in &self.steps {
            if s.before != *cur {
                return false;
            }
            cur = &s.after;
        }
        *cur == self.final_term
    }

    /// One record per step (step 0 is the initial term).
    pub fn records(&self) -> Vec<TraceRecord> {
        let mut out = vec![TraceRecord {
            step: 0,
            rule: "start".into(),
            position: 0,
            term: self.initial.to_string(),
            digest: term_digest(&self.initial),
        }];
        for (i, s) in self.steps.iter().enumerate() {
            out.push(TraceRecord {
                step: i + 1,
                rule: s.rule.to_string(),
                position: s.position,
                term: s.after.to_string(),
                digest: term_digest(&s.after),
            });
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in self.records() {
            let _ = writeln!(s, "-- step {} {} @{} [{}]", r.step, r.rule, r.position, &r.digest[..12]);
            let _ = writeln!(s, "{}", r.term);
        }
        s
    }

    pub fn to_json_lines(&self) -> String {
        let mut s = String::new();
        for r in self.records() {
            let _ = writeln!(s, "{}", serde_json::to_string(&r).expect("record serializes"));
        }
        s
    }
}
