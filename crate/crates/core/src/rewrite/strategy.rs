use std::collections::BTreeSet;

use super::rules::{apply_rule, sd_rule, Rule};
use super::trace::{RewriteStep, Trace};
use super::RewriteError;
use crate::ast::{has_distinct_binders, LetTerm};

type Names = BTreeSet<String>;

/// A term being rewritten, with every rule application recorded.
struct Run {
    term: LetTerm,
    steps: Vec<RewriteStep>,
}

impl Run {
    fn new(term: LetTerm) -> Self {
        Run { term, steps: Vec::new() }
    }

    fn apply(&mut self, rule: Rule, position: usize) -> Result<(), RewriteError> {
        let after = apply_rule(&self.term, &rule, position)?;
        let before = std::mem::replace(&mut self.term, after);
        self.steps.push(RewriteStep {
            rule,
            position,
            before,
            after: self.term.clone(),
        });
        Ok(())
    }

    fn sd(&mut self, k: usize) -> Result<(), RewriteError> {
        let rule = sd_rule(&self.term, k)?;
        self.apply(rule, k)
    }

    fn fv_expr(&self, k: usize) -> Names {
        self.term.defs[k].expr.free_vars().iter().map(|v| v.name().to_string()).collect()
    }

    fn fv_suffix(&self, k: usize) -> Names {
        self.term.suffix_free_vars(k).iter().map(|v| v.name().to_string()).collect()
    }

    /// Gathers, into definition `k`, every definition of the suffix
    /// starting at `k` that uses a variable of `vs`, together with those
    /// using arrow variables bound by gathered definitions.
    fn va(&mut self, k: usize, vs: Names) -> Result<(), RewriteError> {
        if vs.is_empty() {
            return Ok(());
        }
        if k >= self.term.defs.len() {
            return Err(RewriteError::TooFewDefinitions);
        }
        let used_here = self.fv_expr(k);
        if vs.is_disjoint(&used_here) {
            self.va(k + 1, vs)?;
            return self.sd(k);
        }
        let later = self.fv_suffix(k + 1);
        let mut rest: Names = vs.intersection(&later).cloned().collect();
        match self.term.defs[k].pattern.arrow_var() {
            Some(f) => {
                rest.insert(f.name().to_string());
                self.va(k + 1, rest)?;
                self.apply(Rule::Swap3, k)
            }
            // nothing left to gather: this definition already holds all uses
            None if rest.is_empty() => Ok(()),
            None => {
                self.va(k + 1, rest)?;
                self.apply(Rule::Mult, k)
            }
        }
    }

    fn vel(&mut self, k: usize, x: &str) -> Result<(), RewriteError> {
        if k >= self.term.defs.len() {
            return Err(RewriteError::NotDefined { name: x.to_string() });
        }
        let d = &self.term.defs[k];
        if !d.pattern.contains(x) {
            self.vel(k + 1, x)?;
            return self.sd(k);
        }
        let rest = d.pattern.remove(x);
        if !self.fv_suffix(k + 1).contains(x) {
            if rest.is_none() {
                return Err(RewriteError::NotEliminable { name: x.to_string() });
            }
            return self.apply(Rule::Elim(x.to_string()), k);
        }
        match rest.as_ref().and_then(|p| p.arrow_var()).cloned() {
            None => {
                self.va(k + 1, [x.to_string()].into())?;
                self.apply(Rule::Mult, k)?;
            }
            Some(f) => {
                self.va(k + 1, [x.to_string(), f.name().to_string()].into())?;
                self.apply(Rule::Swap3, k)?;
            }
        }
        self.apply(Rule::Elim(x.to_string()), k)
    }
}

fn check_positive(term: &LetTerm) -> Result<(), RewriteError> {
    if term.is_positive() {
        Ok(())
    } else {
        Err(RewriteError::NotPositive {
            what: format!("output {}", term.output),
        })
    }
}

fn check_vel(term: &LetTerm, x: &str) -> Result<(), RewriteError> {
    check_positive(term)?;
    if !has_distinct_binders(term) {
        return Err(RewriteError::NotCanonicalized);
    }
    let Some(v) = term.defined_vars().into_iter().find(|v| v.name() == x) else {
        return Err(RewriteError::NotDefined { name: x.to_string() });
    };
    if !v.is_positive() {
        return Err(RewriteError::NotPositive {
            what: format!("variable {x}"),
        });
    }
    if term.output.contains(x) {
        return Err(RewriteError::InOutput { name: x.to_string() });
    }
    Ok(())
}

/// The definition-swapping procedure on the first two definitions.
pub fn sd(term: &LetTerm) -> Result<LetTerm, RewriteError> {
    let mut run = Run::new(term.clone());
    run.sd(0)?;
    Ok(run.term)
}

/// Variable anticipation: gathers into the first definition every
/// definition that uses a variable of `vs` or, transitively, an arrow
/// variable bound by a gathered definition.
pub fn va(term: &LetTerm, vs: &[&str]) -> Result<(LetTerm, Vec<RewriteStep>), RewriteError> {
    check_positive(term)?;
    if term.defs.is_empty() {
        return Err(RewriteError::TooFewDefinitions);
    }
    let fv: Names = term.free_vars().iter().map(|v| v.name().to_string()).collect();
    let vs: Names = vs.iter().map(|s| s.to_string()).collect();
    let clash: Vec<&str> = vs.iter().filter(|v| term.output.contains(v)).map(|s| s.as_str()).collect();
    if !clash.is_empty() {
        return Err(RewriteError::OutputOverlap { vars: clash.join(", ") });
    }
    let missing: Vec<&str> = vs.difference(&fv).map(|s| s.as_str()).collect();
    if !missing.is_empty() {
        return Err(RewriteError::NotFree { vars: missing.join(", ") });
    }
    let mut run = Run::new(term.clone());
    run.va(0, vs)?;
    Ok((run.term, run.steps))
}

/// Eliminates one positive variable by rewriting.
pub fn vel(term: &LetTerm, x: &str) -> Result<LetTerm, RewriteError> {
    vel_traced(term, x).map(|(t, _)| t)
}

pub fn vel_traced(term: &LetTerm, x: &str) -> Result<(LetTerm, Vec<RewriteStep>), RewriteError> {
    check_vel(term, x)?;
    let mut run = Run::new(term.clone());
    run.vel(0, x)?;
    Ok((run.term, run.steps))
}

/// Eliminates the variables left to right, recording every step.
pub fn vel_seq(term: &LetTerm, order: &[&str]) -> Result<(LetTerm, Trace), RewriteError> {
    let mut run = Run::new(term.clone());
    let mut per_var = Vec::with_capacity(order.len());
    for x in order {
        check_vel(&run.term, x)?;
        let before = run.steps.len();
        run.vel(0, x)?;
        per_var.push(run.steps.len() - before);
    }
    let trace = Trace {
        initial: term.clone(),
        steps: run.steps,
        per_var,
        final_term: run.term.clone(),
    };
    Ok((run.term, trace))
}
