use std::collections::BTreeMap;
use std::sync::Arc;

use super::{big_product, names, Cost, Factor, FactorError, FactorSet, NameSet};
use crate::ast::{has_distinct_binders, Expr, LetTerm, Pattern, Variable};
use crate::denote::web::{projection, space_size, Odometer};
use crate::denote::{Denoter, WeightedRelation, DEFAULT_WEB_CAP};

/// Work done while extracting a factor set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactsStats {
    /// Scalar multiplies spent denoting definition bodies.
    pub denote_ops: u64,
    pub denote_max_table: usize,
    /// Products and sum-outs over arrow variables.
    pub cost: Cost,
}

/// The factor of a definition `binder = e`: its variables are the free
/// variables of `e` and of the binder, and its value at `a ++ b` is
/// `⟦e⟧_{a,b}`.
pub fn factor_of_def(binder: &Pattern, e: &Arc<Expr>, denoter: &mut Denoter) -> Result<Factor, FactorError> {
    let fv = e.free_vars();
    let captured: Vec<&str> = binder
        .vars()
        .into_iter()
        .filter(|v| fv.iter().any(|w| w.name() == v.name()))
        .map(|v| v.name())
        .collect();
    if !captured.is_empty() {
        return Err(FactorError::BinderCapture {
            vars: captured.join(", "),
        });
    }
    let rel = denoter.denote(e)?;
    Ok(relation_factor(&rel, binder))
}

fn relation_factor(rel: &WeightedRelation, binder: &Pattern) -> Factor {
    let rows = rel.rows();
    let bvars = binder.vars();
    let universe: Vec<Variable> = rows.iter().cloned().chain(bvars.iter().map(|v| (*v).clone())).collect();
    let radices: Vec<usize> = universe.iter().map(|v| v.web_size()).collect();
    let n = rows.len();
    let row_w = projection(universe.len(), &rel.row_radices(), &(0..n).collect::<Vec<_>>());
    let col_radices: Vec<usize> = bvars.iter().map(|v| v.web_size()).collect();
    let col_w = projection(universe.len(), &col_radices, &(n..universe.len()).collect::<Vec<_>>());
    let mut od = Odometer::new(radices, vec![row_w, col_w]);
    let mut table = Vec::new();
    while od.advance() {
        table.push(rel.get(od.idx[0], od.idx[1]));
    }
    Factor::new(universe, table)
}

/// The factor set of a let-term.
pub fn facts(term: &LetTerm) -> Result<FactorSet, FactorError> {
    facts_counted(term, DEFAULT_WEB_CAP).map(|(s, _)| s)
}

/// [`facts`], also reporting the work done.
pub fn facts_counted(term: &LetTerm, cap: usize) -> Result<(FactorSet, FactsStats), FactorError> {
    if !has_distinct_binders(term) {
        return Err(FactorError::NotCanonicalized);
    }
    let mut denoter = Denoter::new(cap);
    let mut cost = Cost::with_cap(cap);
    let output = term.output_vars();
    // built back to front, then reversed: definition order, output last
    let mut rev: Vec<Factor> = vec![Factor::constant(output.iter().cloned().collect())];
    for d in term.defs.iter().rev() {
        let fac = factor_of_def(&d.pattern, &d.expr, &mut denoter)?;
        match d.pattern.arrow_var() {
            Some(f) if !output.iter().any(|v| v.name() == f.name()) => {
                let fs: NameSet = [f.name().to_string()].into();
                let (with, without): (Vec<Factor>, Vec<Factor>) =
                    rev.into_iter().partition(|g| g.has_var(f.name()));
                let mut all = vec![fac];
                all.extend(with.into_iter().rev());
                let merged = big_product(&all, &mut cost)?.sum_out(&fs, &mut cost)?;
                rev = without;
                rev.push(merged);
            }
            _ => rev.push(fac),
        }
    }
    rev.reverse();
    let stats = FactsStats {
        denote_ops: denoter.ops(),
        denote_max_table: denoter.max_table(),
        cost,
    };
    Ok((FactorSet::new(rev), stats))
}

/// Checks `vars(Facts L) = FV(L) ⊎ (FVᵃ(output) \ FV(L)) ⊎ ⊎ᵢ FV⁺(vᵢ)`,
/// including disjointness of the right-hand parts.
pub fn facts_varset_check(term: &LetTerm) -> Result<bool, FactorError> {
    let set = facts(term)?;
    let fv = names(&term.free_vars());
    let mut rhs = fv.clone();
    let mut count = rhs.len();
    for v in term.output.vars() {
        if v.is_arrow() && !fv.contains(v.name()) {
            rhs.insert(v.name().to_string());
            count += 1;
        }
    }
    for d in &term.defs {
        for v in d.pattern.vars() {
            if v.is_positive() {
                rhs.insert(v.name().to_string());
                count += 1;
            }
        }
    }
    Ok(count == rhs.len() && set.var_names() == rhs)
}

/// Recovers `⟦L⟧` from its factors.
pub fn semantics_from_facts(term: &LetTerm) -> Result<WeightedRelation, FactorError> {
    semantics_from_facts_counted(term, DEFAULT_WEB_CAP).map(|(r, _)| r)
}

pub fn semantics_from_facts_counted(
    term: &LetTerm,
    cap: usize,
) -> Result<(WeightedRelation, FactsStats), FactorError> {
    let (set, mut stats) = facts_counted(term, cap)?;
    let rows: Vec<Variable> = term.free_vars().into_iter().collect();
    let rel = relation_from_factors(&set.items, rows, &term.output, &mut stats.cost)?;
    Ok((rel, stats))
}

/// Reads a weighted relation off a factor set: multiply everything, sum
/// out the variables that are neither rows nor in `output`, then read
/// entries off, with zero wherever a row variable shared with the output
/// takes different values on the two sides.
pub fn relation_from_factors(
    items: &[Factor],
    rows: Vec<Variable>,
    output: &Pattern,
    cost: &mut Cost,
) -> Result<WeightedRelation, FactorError> {
    let cap = cost.cap;
    let out: Vec<&Variable> = output.vars();
    let keep: NameSet = names(rows.iter().chain(out.iter().copied()));
    let all: NameSet = items.iter().flat_map(|f| f.names()).collect();
    let drop: NameSet = all.difference(&keep).cloned().collect();
    let prod = big_product(items, cost)?;
    let s = prod.sum_out(&drop, cost)?;

    // universe: the free variables, then output variables not among them
    let mut universe: Vec<Variable> = rows.clone();
    for v in &out {
        if !universe.iter().any(|w| w.name() == v.name()) {
            universe.push((*v).clone());
        }
    }
    let at: BTreeMap<&str, usize> = universe.iter().enumerate().map(|(i, v)| (v.name(), i)).collect();
    let radices: Vec<usize> = universe.iter().map(|v| v.web_size()).collect();
    let row_radices: Vec<usize> = rows.iter().map(|v| v.web_size()).collect();
    let col_radices: Vec<usize> = out.iter().map(|v| v.web_size()).collect();
    let n_rows = space_size(&row_radices).expect("row web");
    let n_cols = space_size(&col_radices).expect("column web");
    let size = n_rows.checked_mul(n_cols).filter(|n| *n <= cap).ok_or(FactorError::WebCapExceeded {
        size: n_rows.saturating_mul(n_cols),
        cap,
    })?;
    let row_w = projection(universe.len(), &row_radices, &(0..rows.len()).collect::<Vec<_>>());
    let col_pos: Vec<usize> = out.iter().map(|v| at[v.name()]).collect();
    let col_w = projection(universe.len(), &col_radices, &col_pos);
    let s_radices: Vec<usize> = s.vars().iter().map(|v| v.web_size()).collect();
    let s_pos: Vec<usize> = s.vars().iter().map(|v| at[v.name()]).collect();
    let s_w = projection(universe.len(), &s_radices, &s_pos);
    let mut entries = vec![0.0; size];
    let mut od = Odometer::new(radices, vec![row_w, col_w, s_w]);
    while od.advance() {
        entries[od.idx[0] * n_cols + od.idx[1]] = s.table()[od.idx[2]];
    }
    Ok(WeightedRelation::new(rows, output.ty(), entries))
}
