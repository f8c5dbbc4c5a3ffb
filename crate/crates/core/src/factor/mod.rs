//! Factors over typed variables, classical variable elimination on factor
//! sets, and extraction of factor sets from let-terms.

mod facts;
mod ordering;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::ast::Variable;
use crate::denote::web::{projection, space_size, Odometer};
use crate::denote::{DenoteError, DEFAULT_WEB_CAP};

pub use facts::{
    factor_of_def, facts, facts_counted, facts_varset_check, relation_from_factors, semantics_from_facts,
    semantics_from_facts_counted,
    FactsStats,
};
pub use ordering::{eliminable_order_candidates, min_degree_order};

pub type NameSet = BTreeSet<String>;

pub fn names<'a>(vars: impl IntoIterator<Item = &'a Variable>) -> NameSet {
    vars.into_iter().map(|v| v.name().to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FactorError {
    #[error("variable `{name}` does not occur in the factor set")]
    UnknownVariable { name: String },
    #[error("variable `{name}` has different types in the two factors")]
    SharedVarTypeMismatch { name: String },
    #[error("binder variables {vars} are also free in the bound expression")]
    BinderCapture { vars: String },
    #[error("top-level binders must be pairwise distinct and distinct from free variables; canonicalize the term first")]
    NotCanonicalized,
    #[error("factor of {size} cells exceeds the web cap of {cap}")]
    WebCapExceeded { size: usize, cap: usize },
    #[error(transparent)]
    Denote(#[from] DenoteError),
}

impl FactorError {
    pub fn is_web_cap(&self) -> bool {
        match self {
            FactorError::WebCapExceeded { .. } => true,
            FactorError::Denote(e) => e.is_web_cap(),
            _ => false,
        }
    }
}

/// Running cost of factor operations: one unit per scalar multiplication in
/// a product and per addition in a sum-out, plus the largest table built.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Cost {
    pub ops: u64,
    pub max_table: usize,
    #[serde(skip)]
    pub cap: usize,
}

impl Default for Cost {
    fn default() -> Self {
        Cost::with_cap(DEFAULT_WEB_CAP)
    }
}

impl Cost {
    pub fn with_cap(cap: usize) -> Self {
        Cost {
            ops: 0,
            max_table: 0,
            cap,
        }
    }

    fn table(&mut self, radices: &[usize]) -> Result<usize, FactorError> {
        match space_size(radices) {
            Some(n) if n <= self.cap => {
                self.max_table = self.max_table.max(n);
                Ok(n)
            }
            n => Err(FactorError::WebCapExceeded {
                size: n.unwrap_or(usize::MAX),
                cap: self.cap,
            }),
        }
    }
}

/// A table over the web of a set of variables, kept sorted by name.
#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    vars: Vec<Variable>,
    table: Vec<f64>,
}

impl Factor {
    /// Builds a factor, sorting the variables and permuting the table, which
    /// is given in the order of `vars`.
    pub fn new(vars: Vec<Variable>, table: Vec<f64>) -> Self {
        let radices: Vec<usize> = vars.iter().map(|v| v.web_size()).collect();
        assert_eq!(space_size(&radices), Some(table.len()), "factor shape");
        let mut order: Vec<usize> = (0..vars.len()).collect();
        order.sort_by(|a, b| vars[*a].cmp(&vars[*b]));
        assert!(
            order.windows(2).all(|w| vars[w[0]].name() != vars[w[1]].name()),
            "duplicate factor variable"
        );
        if order.iter().enumerate().all(|(i, j)| i == *j) {
            return Factor { vars, table };
        }
        let sorted: Vec<Variable> = order.iter().map(|i| vars[*i].clone()).collect();
        let sorted_radices: Vec<usize> = sorted.iter().map(|v| v.web_size()).collect();
        // sorted variable j sits at original position order[j]
        let w = projection(vars.len(), &sorted_radices, &order);
        let mut out = vec![0.0; table.len()];
        let mut od = Odometer::new(radices, vec![w]);
        let mut k = 0;
        while od.advance() {
            out[od.idx[0]] = table[k];
            k += 1;
        }
        Factor { vars: sorted, table: out }
    }

    /// `(∅, 1)`.
    pub fn unit() -> Self {
        Factor {
            vars: vec![],
            table: vec![1.0],
        }
    }

    /// The constant 1 over a set of variables.
    pub fn constant(vars: Vec<Variable>) -> Self {
        let n = vars.iter().map(|v| v.web_size()).product();
        Factor::new(vars, vec![1.0; n])
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn names(&self) -> NameSet {
        names(&self.vars)
    }

    pub fn has_var(&self, name: &str) -> bool {
        self.vars.iter().any(|v| v.name() == name)
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }

    /// Largest web among the variables (1 for the empty factor).
    pub fn base(&self) -> usize {
        self.vars.iter().map(|v| v.web_size()).max().unwrap_or(1)
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    fn radices(&self) -> Vec<usize> {
        self.vars.iter().map(|v| v.web_size()).collect()
    }

    /// Sums out the variables of `v` that occur in the factor.
    pub fn sum_out(&self, v: &NameSet, cost: &mut Cost) -> Result<Factor, FactorError> {
        if !self.vars.iter().any(|x| v.contains(x.name())) {
            return Ok(self.clone());
        }
        let keep: Vec<usize> = (0..self.vars.len()).filter(|i| !v.contains(self.vars[*i].name())).collect();
        let out_vars: Vec<Variable> = keep.iter().map(|i| self.vars[*i].clone()).collect();
        let out_radices: Vec<usize> = out_vars.iter().map(|x| x.web_size()).collect();
        let n = cost.table(&out_radices)?;
        let w = projection(self.vars.len(), &out_radices, &keep);
        let mut out = vec![0.0; n];
        let mut od = Odometer::new(self.radices(), vec![w]);
        let mut k = 0;
        while od.advance() {
            out[od.idx[0]] += self.table[k];
            k += 1;
        }
        cost.ops += self.table.len() as u64;
        Ok(Factor {
            vars: out_vars,
            table: out,
        })
    }

    /// Pointwise product over the union of the variables.
    pub fn product(&self, other: &Factor, cost: &mut Cost) -> Result<Factor, FactorError> {
        let mut merged: BTreeMap<&str, &Variable> = BTreeMap::new();
        for v in self.vars.iter().chain(&other.vars) {
            if let Some(w) = merged.insert(v.name(), v) {
                if w.ty() != v.ty() {
                    return Err(FactorError::SharedVarTypeMismatch {
                        name: v.name().to_string(),
                    });
                }
            }
        }
        let vars: Vec<Variable> = merged.into_values().cloned().collect();
        let radices: Vec<usize> = vars.iter().map(|v| v.web_size()).collect();
        let n = cost.table(&radices)?;
        let pos = |f: &Factor| -> Vec<usize> {
            f.vars
                .iter()
                .map(|v| vars.iter().position(|w| w.name() == v.name()).expect("merged"))
                .collect()
        };
        let wa = projection(vars.len(), &self.radices(), &pos(self));
        let wb = projection(vars.len(), &other.radices(), &pos(other));
        let mut table = Vec::with_capacity(n);
        let mut od = Odometer::new(radices, vec![wa, wb]);
        while od.advance() {
            table.push(self.table[od.idx[0]] * other.table[od.idx[1]]);
        }
        cost.ops += n as u64;
        Ok(Factor { vars, table })
    }

    /// Value at an assignment of (at least) the factor's variables, given
    /// as digits by name.
    pub fn value_at(&self, digits: &BTreeMap<String, usize>) -> Option<f64> {
        let mut idx = 0;
        for v in &self.vars {
            idx = idx * v.web_size() + digits.get(v.name())?;
        }
        Some(self.table[idx])
    }

    pub fn total_mass(&self) -> f64 {
        self.table.iter().sum()
    }

    /// Same variables (with types) and tables within `tol`.
    pub fn approx_eq(&self, other: &Factor, tol: f64) -> bool {
        self.vars == other.vars && self.max_abs_diff(other).is_some_and(|d| d <= tol)
    }

    pub fn max_abs_diff(&self, other: &Factor) -> Option<f64> {
        if self.vars != other.vars {
            return None;
        }
        Some(
            self.table
                .iter()
                .zip(&other.table)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// One line: sorted variables with types, then the table with 12
    /// significant digits.
    pub fn dump(&self) -> String {
        let vars: Vec<String> = self.vars.iter().map(|v| format!("{}:{}", v.name(), v.ty())).collect();
        let vals: Vec<String> = self.table.iter().map(|x| fmt_num(*x)).collect();
        format!("{{{}}} [{}]", vars.join(", "), vals.join(" "))
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Formats a real with 12 significant digits, trimming trailing zeros.
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let s = format!("{:.*e}", 11, x);
    let (mant, exp) = s.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let mut t = format!("{:.*}", decimals, x);
        if t.contains('.') {
            while t.ends_with('0') {
                t.pop();
            }
            if t.ends_with('.') {
                t.pop();
            }
        }
        t
    } else {
        let mut m = mant.to_string();
        if m.contains('.') {
            while m.ends_with('0') {
                m.pop();
            }
            if m.ends_with('.') {
                m.pop();
            }
        }
        format!("{m}e{exp}")
    }
}

/// Cost of one elimination step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepCost {
    pub var: String,
    /// Number of factors mentioning the variable.
    pub factors: usize,
    /// Degree of the product of those factors.
    pub degree: usize,
    pub base: usize,
    /// Table size of that product.
    pub table: usize,
    pub ops: u64,
}

impl StepCost {
    /// `|Γ_v| · base^degree`.
    pub fn bound(&self) -> u128 {
        (self.factors as u128) * (self.base as u128).pow(self.degree as u32)
    }
}

/// A multiset of factors with the costs accumulated while building it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FactorSet {
    pub items: Vec<Factor>,
    pub steps: Vec<StepCost>,
}

impl FactorSet {
    pub fn new(items: Vec<Factor>) -> Self {
        FactorSet {
            items,
            steps: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Union of the variables of all factors.
    pub fn vars(&self) -> Vec<Variable> {
        let m: BTreeMap<&str, &Variable> = self
            .items
            .iter()
            .flat_map(|f| f.vars.iter())
            .map(|v| (v.name(), v))
            .collect();
        m.into_values().cloned().collect()
    }

    pub fn var_names(&self) -> NameSet {
        self.items.iter().flat_map(|f| f.names()).collect()
    }

    /// Factors meeting `v`, and the rest.
    pub fn partition(&self, v: &NameSet) -> (Vec<Factor>, Vec<Factor>) {
        self.items
            .iter()
            .cloned()
            .partition(|f| f.vars.iter().any(|x| v.contains(x.name())))
    }

    pub fn max_table(&self) -> usize {
        self.steps.iter().map(|s| s.table).max().unwrap_or(0)
    }

    pub fn ops(&self) -> u64 {
        self.steps.iter().map(|s| s.ops).sum()
    }

    pub fn dump(&self) -> String {
        let mut s = String::new();
        for f in &self.items {
            let _ = writeln!(s, "{}", f.dump());
        }
        s
    }
}

/// Left fold of the product; the empty product is `(∅, 1)`.
pub fn big_product(factors: &[Factor], cost: &mut Cost) -> Result<Factor, FactorError> {
    let Some((first, rest)) = factors.split_first() else {
        return Ok(Factor::unit());
    };
    let mut acc = first.clone();
    for f in rest {
        acc = acc.product(f, cost)?;
    }
    Ok(acc)
}

/// Eliminates one variable: `{Σ_v ⊙Γ_v} ⊎ Γ_¬v`.
pub fn vef_step(set: &FactorSet, v: &str, cap: usize) -> Result<FactorSet, FactorError> {
    let vs: NameSet = [v.to_string()].into();
    let (with, without) = set.partition(&vs);
    if with.is_empty() {
        return Err(FactorError::UnknownVariable { name: v.to_string() });
    }
    let mut cost = Cost::with_cap(cap);
    let prod = big_product(&with, &mut cost)?;
    let summed = prod.sum_out(&vs, &mut cost)?;
    let step = StepCost {
        var: v.to_string(),
        factors: with.len(),
        degree: prod.degree(),
        base: prod.base(),
        table: cost.max_table,
        ops: cost.ops,
    };
    let mut items = without;
    items.push(summed);
    let mut steps = set.steps.clone();
    steps.push(step);
    Ok(FactorSet { items, steps })
}

/// Eliminates the variables in order.
pub fn vef(set: &FactorSet, order: &[&str]) -> Result<FactorSet, FactorError> {
    vef_with_cap(set, order, DEFAULT_WEB_CAP)
}

pub fn vef_with_cap(set: &FactorSet, order: &[&str], cap: usize) -> Result<FactorSet, FactorError> {
    let mut cur = set.clone();
    for v in order {
        cur = vef_step(&cur, v, cap)?;
    }
    Ok(cur)
}

/// Why two factor multisets differ.
#[derive(Clone, Debug, PartialEq)]
pub enum SetMismatch {
    /// The multisets of variable sets differ.
    VarSets { left: Vec<String>, right: Vec<String> },
    /// Variable sets agree but no pairing keeps all tables within tolerance.
    Tables { vars: String, best: f64 },
}

impl fmt::Display for SetMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SetMismatch::VarSets { left, right } => {
                write!(f, "variable sets differ: [{}] vs [{}]", left.join(" "), right.join(" "))
            }
            SetMismatch::Tables { vars, best } => {
                write!(f, "tables over {vars} differ (closest pairing off by {best:e})")
            }
        }
    }
}

fn varset_key(f: &Factor) -> String {
    let v: Vec<String> = f.vars.iter().map(|v| format!("{}:{}", v.name(), v.ty())).collect();
    format!("{{{}}}", v.join(","))
}

/// Multiset equality up to `tol`: variable sets must agree exactly, and
/// within each group of equal variable sets the tables must admit a
/// perfect pairing. Returns the largest table difference of the pairing.
pub fn match_factor_sets(a: &[Factor], b: &[Factor], tol: f64) -> Result<f64, SetMismatch> {
    let mut ka: Vec<String> = a.iter().map(varset_key).collect();
    let mut kb: Vec<String> = b.iter().map(varset_key).collect();
    ka.sort();
    kb.sort();
    if ka != kb {
        return Err(SetMismatch::VarSets { left: ka, right: kb });
    }
    let mut groups: BTreeMap<String, (Vec<&Factor>, Vec<&Factor>)> = BTreeMap::new();
    for f in a {
        groups.entry(varset_key(f)).or_default().0.push(f);
    }
    for f in b {
        groups.entry(varset_key(f)).or_default().1.push(f);
    }
    let mut worst: f64 = 0.0;
    for (key, (ga, gb)) in groups {
        let diff: Vec<Vec<f64>> = ga
            .iter()
            .map(|x| gb.iter().map(|y| x.max_abs_diff(y).unwrap_or(f64::INFINITY)).collect())
            .collect();
        let ok: Vec<Vec<bool>> = diff.iter().map(|r| r.iter().map(|d| *d <= tol).collect()).collect();
        match perfect_matching(&ok) {
            Some(m) => {
                for (i, j) in m.iter().enumerate() {
                    worst = worst.max(diff[i][*j]);
                }
            }
            None => {
                let best = diff
                    .iter()
                    .map(|r| r.iter().copied().fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                return Err(SetMismatch::Tables { vars: key, best });
            }
        }
    }
    Ok(worst)
}

/// Kuhn's augmenting-path matching on a square compatibility matrix.
fn perfect_matching(ok: &[Vec<bool>]) -> Option<Vec<usize>> {
    let n = ok.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, ok: &[Vec<bool>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for j in 0..ok.len() {
            if ok[i][j] && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|k| augment(k, ok, seen, owner)) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, ok, &mut seen, &mut owner) {
            return None;
        }
    }
    let mut m = vec![0; n];
    for (j, o) in owner.iter().enumerate() {
        m[o.expect("perfect")] = j;
    }
    Some(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(n: &str) -> Variable {
        Variable::bool(n)
    }

    #[test]
    fn new_sorts_and_permutes() {
        // table over (y, x): f(y, x) = 10 y + x in digits
        let f = Factor::new(vec![bx("y"), bx("x")], vec![0.0, 1.0, 10.0, 11.0]);
        assert_eq!(f.vars()[0].name(), "x");
        // (x, y) order: (0,0)=0 (0,1)=10 (1,0)=1 (1,1)=11
        assert_eq!(f.table(), &[0.0, 10.0, 1.0, 11.0]);
    }

    #[test]
    fn sum_out_examples() {
        let f = Factor::new(vec![bx("a"), bx("b")], vec![1.0, 2.0, 3.0, 4.0]);
        let mut c = Cost::default();
        assert_eq!(f.sum_out(&NameSet::new(), &mut c).unwrap(), f);
        let g = f.sum_out(&["a".to_string()].into(), &mut c).unwrap();
        assert_eq!(g.table(), &[4.0, 6.0]);
        let all = f.sum_out(&["a".to_string(), "b".to_string(), "z".to_string()].into(), &mut c).unwrap();
        assert_eq!(all.table(), &[10.0]);
        assert_eq!(all.degree(), 0);
    }

    #[test]
    fn product_shares_variables() {
        let f = Factor::new(vec![bx("x3"), bx("x4"), bx("x5")], (0..8).map(f64::from).collect());
        let g = Factor::new(vec![bx("x3"), bx("x4")], vec![1.0, 2.0, 3.0, 4.0]);
        let mut c = Cost::default();
        let p = f.product(&g, &mut c).unwrap();
        assert_eq!(p.len(), 8);
        assert_eq!(p.table()[5], 5.0 * 3.0);
        assert_eq!(f.product(&Factor::unit(), &mut c).unwrap(), f);
        let bad = Factor::new(vec![Variable::new("x3", crate::ast::Type::tensor(crate::ast::Type::Bool, crate::ast::Type::Bool))], vec![1.0; 4]);
        assert!(matches!(f.product(&bad, &mut c), Err(FactorError::SharedVarTypeMismatch { .. })));
    }

    #[test]
    fn partition_and_vef_identity() {
        let s = FactorSet::new(vec![
            Factor::constant(vec![bx("a")]),
            Factor::constant(vec![bx("b")]),
        ]);
        let (w, wo) = s.partition(&["z".to_string()].into());
        assert!(w.is_empty());
        assert_eq!(wo.len(), 2);
        assert_eq!(vef(&s, &[]).unwrap(), s);
        assert!(matches!(vef(&s, &["z"]), Err(FactorError::UnknownVariable { .. })));
    }

    #[test]
    fn matching_handles_duplicates() {
        let a = Factor::new(vec![bx("a")], vec![0.2, 0.8]);
        let b = Factor::new(vec![bx("a")], vec![0.5, 0.5]);
        assert!(match_factor_sets(&[a.clone(), b.clone()], &[b.clone(), a.clone()], 1e-9).is_ok());
        assert!(match_factor_sets(&[a.clone(), a.clone()], &[a.clone(), b.clone()], 1e-9).is_err());
        assert!(matches!(
            match_factor_sets(&[a.clone()], &[Factor::unit()], 1e-9),
            Err(SetMismatch::VarSets { .. })
        ));
    }

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(0.3), "0.3");
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_num(2.5e-8), "2.5e-8");
        assert_eq!(fmt_num(0.0), "0");
    }
}
