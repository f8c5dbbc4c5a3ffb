//! The `compare`, `cost` and `orderings` reports.

use std::fmt::Write;

use serde::Serialize;

use crate::ast::LetTerm;
use crate::denote::{Denoter, WeightedRelation, TOL};
use crate::factor::{
    eliminable_order_candidates, facts_counted, fmt_num, match_factor_sets, min_degree_order,
    relation_from_factors, semantics_from_facts_counted, vef_with_cap, FactorError, FactorSet, StepCost,
};
use crate::rewrite::{vel_seq, RewriteError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Denote(#[from] crate::denote::DenoteError),
    #[error(transparent)]
    Factor(#[from] FactorError),
    #[error(transparent)]
    Rewrite(#[from] RewriteError),
}

/// One way of computing `⟦L⟧`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathReport {
    pub path: &'static str,
    /// Largest table built along the way.
    pub max_table: usize,
    /// Scalar multiplications and additions.
    pub ops: u64,
    /// Distance to the `denote` result.
    pub max_error: f64,
    #[serde(skip)]
    pub relation: WeightedRelation,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareReport {
    pub order: Vec<String>,
    pub output: Vec<String>,
    pub paths: Vec<PathReport>,
    /// Largest pairwise distance between the paths.
    pub max_discrepancy: f64,
    /// Factors of the rewritten term match those left by classical
    /// elimination.
    pub factors_agree: bool,
    pub vel_steps: usize,
}

impl CompareReport {
    pub fn ok(&self) -> bool {
        self.max_discrepancy <= TOL && self.factors_agree
    }

    pub fn path(&self, name: &str) -> Option<&PathReport> {
        self.paths.iter().find(|p| p.path == name)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "order: {}", self.order.join(","));
        let _ = writeln!(s, "output: {}", self.output.join(" "));
        let _ = writeln!(s, "{:<22} {:>10} {:>12} {:>12}", "path", "max_table", "ops", "max_error");
        for p in &self.paths {
            let _ = writeln!(s, "{:<22} {:>10} {:>12} {:>12}", p.path, p.max_table, p.ops, fmt_err(p.max_error));
        }
        let _ = writeln!(s, "max discrepancy: {}", fmt_err(self.max_discrepancy));
        let _ = writeln!(s, "vel steps: {}", self.vel_steps);
        let _ = writeln!(
            s,
            "factors of vel term match vef: {}",
            if self.factors_agree { "yes" } else { "no" }
        );
        let _ = writeln!(s, "distribution:");
        if let Some(d) = self.paths.first() {
            s.push_str(&distribution_text(&d.relation));
        }
        s
    }
}

fn fmt_err(x: f64) -> String {
    format!("{x:.3e}")
}

/// Entries of a relation, one line per row, 12 significant digits.
pub fn distribution_text(rel: &WeightedRelation) -> String {
    let mut s = String::new();
    let cols = rel.n_cols().max(1);
    for row in rel.entries().chunks(cols) {
        let cells: Vec<String> = row.iter().map(|x| fmt_num(*x)).collect();
        let _ = writeln!(s, "{}", cells.join(" "));
    }
    s
}

/// Runs the four paths (`denote`, `semantics_from_facts`, `vef`, `vel`) on
/// `term` with the elimination `order`.
pub fn compare(term: &LetTerm, order: &[&str], cap: usize) -> Result<CompareReport, ReportError> {
    let rows: Vec<_> = term.free_vars().into_iter().collect();

    let mut denoter = Denoter::new(cap);
    let direct = (*denoter.denote_term(term)?).clone();
    let mut paths = vec![PathReport {
        path: "denote",
        max_table: denoter.max_table(),
        ops: denoter.ops(),
        max_error: 0.0,
        relation: direct.clone(),
    }];

    let (rel, stats) = semantics_from_facts_counted(term, cap)?;
    paths.push(PathReport {
        path: "semantics_from_facts",
        max_table: stats.denote_max_table.max(stats.cost.max_table),
        ops: stats.denote_ops + stats.cost.ops,
        max_error: 0.0,
        relation: rel,
    });

    let (initial, _) = facts_counted(term, cap)?;
    let eliminated = vef_with_cap(&initial, order, cap)?;
    let mut read = crate::factor::Cost::with_cap(cap);
    let rel = relation_from_factors(&eliminated.items, rows, &term.output, &mut read)?;
    paths.push(PathReport {
        path: "vef",
        max_table: eliminated.max_table(),
        ops: eliminated.ops(),
        max_error: 0.0,
        relation: rel,
    });

    let (rewritten, trace) = vel_seq(term, order)?;
    let mut denoter = Denoter::new(cap);
    let rel = (*denoter.denote_term(&rewritten)?).clone();
    paths.push(PathReport {
        path: "vel",
        max_table: denoter.max_table(),
        ops: denoter.ops(),
        max_error: 0.0,
        relation: rel,
    });
    let (after, _) = facts_counted(&rewritten, cap)?;
    let factors_agree = match_factor_sets(&after.items, &eliminated.items, TOL).is_ok();

    let dist = |a: &WeightedRelation, b: &WeightedRelation| a.max_abs_diff(b).unwrap_or(f64::INFINITY);
    let mut max_discrepancy: f64 = 0.0;
    for i in 0..paths.len() {
        for j in 0..paths.len() {
            max_discrepancy = max_discrepancy.max(dist(&paths[i].relation, &paths[j].relation));
        }
    }
    for p in &mut paths {
        p.max_error = dist(&p.relation, &direct);
    }

    Ok(CompareReport {
        order: order.iter().map(|s| s.to_string()).collect(),
        output: term.output.vars().iter().map(|v| v.name().to_string()).collect(),
        paths,
        max_discrepancy,
        factors_agree,
        vel_steps: trace.len(),
    })
}

/// Cost of classical elimination along an order, with the number of
/// rewrite steps the rewriting strategy spends on each variable.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostReport {
    pub order: Vec<String>,
    pub steps: Vec<StepCost>,
    pub max_table: usize,
    pub ops: u64,
    pub vel_steps_per_var: Vec<usize>,
}

impl CostReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "order: {}", self.order.join(","));
        let _ = writeln!(
            s,
            "{:<10} {:>8} {:>7} {:>8} {:>8} {:>10} {:>10}",
            "var", "factors", "degree", "table", "ops", "bound", "vel_steps"
        );
        for (st, n) in self.steps.iter().zip(&self.vel_steps_per_var) {
            let _ = writeln!(
                s,
                "{:<10} {:>8} {:>7} {:>8} {:>8} {:>10} {:>10}",
                st.var,
                st.factors,
                st.degree,
                st.table,
                st.ops,
                st.bound(),
                n
            );
        }
        let _ = writeln!(s, "max table: {}", self.max_table);
        let _ = writeln!(s, "total ops: {}", self.ops);
        s
    }
}

pub fn cost(term: &LetTerm, order: &[&str], cap: usize) -> Result<CostReport, ReportError> {
    let (initial, _) = facts_counted(term, cap)?;
    let eliminated = vef_with_cap(&initial, order, cap)?;
    let (_, trace) = vel_seq(term, order)?;
    Ok(CostReport {
        order: order.iter().map(|s| s.to_string()).collect(),
        max_table: eliminated.max_table(),
        ops: eliminated.ops(),
        steps: eliminated.steps,
        vel_steps_per_var: trace.per_var,
    })
}

/// An elimination order suggested by the greedy min-degree heuristic over
/// every eliminable variable.
pub fn suggest_order(term: &LetTerm, cap: usize) -> Result<Vec<String>, ReportError> {
    let (set, _): (FactorSet, _) = facts_counted(term, cap)?;
    Ok(min_degree_order(&set, &eliminable_order_candidates(term)))
}
