use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use super::RewriteError;
use crate::ast::{typecheck_expr, Definition, Expr, FreshNames, LetTerm, Pattern, Type, Variable};

/// The let-term rewriting rules.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "String")]
pub enum Rule {
    /// Swap two independent definitions.
    Swap1,
    /// Move the second definition in front as a function of the shared
    /// positive variables.
    Swap2,
    /// Fold the first definition, whose arrow variable the second one uses,
    /// into the second.
    Swap3,
    /// Couple two definitions, the first one positive.
    Mult,
    /// Make a variable local to its definition.
    Elim(String),
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::Swap1 => f.write_str("Swap1"),
            Rule::Swap2 => f.write_str("Swap2"),
            Rule::Swap3 => f.write_str("Swap3"),
            Rule::Mult => f.write_str("Mult"),
            Rule::Elim(x) => write!(f, "Elim {x}"),
        }
    }
}

impl From<Rule> for String {
    fn from(r: Rule) -> String {
        r.to_string()
    }
}

impl Rule {
    pub fn is_swap(&self) -> bool {
        matches!(self, Rule::Swap1 | Rule::Swap2 | Rule::Swap3)
    }

    /// Parses the [`fmt::Display`] form (`Swap1`, `Mult`, `Elim x`, ...).
    pub fn parse(s: &str) -> Option<Rule> {
        let s = s.trim();
        match s {
            "Swap1" => Some(Rule::Swap1),
            "Swap2" => Some(Rule::Swap2),
            "Swap3" => Some(Rule::Swap3),
            "Mult" => Some(Rule::Mult),
            _ => {
                let x = s.strip_prefix("Elim")?.trim();
                (!x.is_empty()).then(|| Rule::Elim(x.to_string()))
            }
        }
    }
}

fn names_of(p: &Pattern) -> BTreeSet<&str> {
    p.vars().into_iter().map(|v| v.name()).collect()
}

fn violated(rule: &Rule, position: usize, reason: impl Into<String>) -> RewriteError {
    RewriteError::SideConditionViolated {
        rule: rule.to_string(),
        position,
        reason: reason.into(),
    }
}

/// Variables of `p` free in `e`, in pattern order.
fn shared<'a>(p: &'a Pattern, e: &Expr) -> Vec<&'a Variable> {
    let fv = e.free_vars();
    p.vars()
        .into_iter()
        .filter(|v| fv.iter().any(|w| w.name() == v.name()))
        .collect()
}

fn disjoint_patterns(rule: &Rule, pos: usize, a: &Pattern, b: &Pattern) -> Result<(), RewriteError> {
    let (na, nb) = (names_of(a), names_of(b));
    match na.intersection(&nb).next() {
        Some(x) => Err(violated(rule, pos, format!("`{x}` is bound by both definitions"))),
        None => Ok(()),
    }
}

/// `⟨p, e⟩` as an expression, or just `e` when `p` is absent.
fn pair_with(p: Option<&Pattern>, e: std::sync::Arc<Expr>) -> std::sync::Arc<Expr> {
    match p {
        Some(p) => Expr::pair(Expr::from_pattern(p), e),
        None => e,
    }
}

/// Applies one rule at definition index `position` (the first definition
/// the rule touches), checking its side condition.
pub fn apply_rule(term: &LetTerm, rule: &Rule, position: usize) -> Result<LetTerm, RewriteError> {
    let pos = position;
    let needs = if matches!(rule, Rule::Elim(_)) { 1 } else { 2 };
    if pos + needs > term.defs.len() {
        return Err(violated(
            rule,
            pos,
            format!("needs {needs} definition(s) at this position, the term has {}", term.defs.len()),
        ));
    }
    let d1 = &term.defs[pos];
    let replacement: Vec<Definition> = match rule {
        Rule::Swap1 => {
            let d2 = &term.defs[pos + 1];
            if let Some(x) = shared(&d1.pattern, &d2.expr).first() {
                return Err(violated(rule, pos, format!("`{x}` is used by the second definition")));
            }
            if let Some(y) = shared(&d2.pattern, &d1.expr).first() {
                return Err(violated(rule, pos, format!("`{y}` would be captured in the first definition")));
            }
            vec![d2.clone(), d1.clone()]
        }
        Rule::Swap2 => {
            let d2 = &term.defs[pos + 1];
            let xs = shared(&d1.pattern, &d2.expr);
            if xs.is_empty() {
                return Err(violated(rule, pos, "the definitions share no variable"));
            }
            if let Some(f) = xs.iter().find(|v| !v.is_positive()) {
                return Err(violated(rule, pos, format!("shared variable `{f}` is not positive")));
            }
            let result = typecheck_expr(&d2.expr).map_err(|e| violated(rule, pos, e.to_string()))?;
            let types: Vec<Type> = xs.iter().map(|v| v.ty().clone()).collect();
            let input = Type::tensor_of(&types).expect("non-empty");
            let mut fresh = FreshNames::for_term(term);
            let g = Variable::new(fresh.fresh("g"), Type::arrow(input, result));
            let params: Vec<Variable> = xs.iter().map(|v| fresh.fresh_var(v)).collect();
            let map: HashMap<String, Variable> = xs
                .iter()
                .zip(&params)
                .map(|(x, y)| (x.name().to_string(), y.clone()))
                .collect();
            let lam = Expr::lam(
                Pattern::from_vars(params).expect("non-empty"),
                d2.expr.rename_free(&map),
            );
            let args = Pattern::from_vars(xs.iter().map(|v| (*v).clone())).expect("non-empty");
            vec![
                Definition::new(Pattern::Var(g.clone()), lam),
                d1.clone(),
                Definition::new(d2.pattern.clone(), Expr::arrow_app(g, args)),
            ]
        }
        Rule::Swap3 => {
            let d2 = &term.defs[pos + 1];
            let Some(f) = d1.pattern.arrow_var() else {
                return Err(violated(rule, pos, "the first pattern has no arrow variable"));
            };
            if !d2.expr.has_free(f.name()) {
                return Err(violated(rule, pos, format!("`{f}` is not used by the second definition")));
            }
            let plus = d1.pattern.positive_part();
            if let Some(p) = &plus {
                disjoint_patterns(rule, pos, p, &d2.pattern)?;
            }
            let body = Expr::let_in(d1.pattern.clone(), d1.expr.clone(), pair_with(plus.as_ref(), d2.expr.clone()));
            let pattern = match plus {
                Some(p) => Pattern::pair(p, d2.pattern.clone()),
                None => d2.pattern.clone(),
            };
            vec![Definition::new(pattern, body)]
        }
        Rule::Mult => {
            let d2 = &term.defs[pos + 1];
            if !d1.pattern.is_positive() {
                return Err(violated(rule, pos, "the first pattern is not positive"));
            }
            disjoint_patterns(rule, pos, &d1.pattern, &d2.pattern)?;
            let body = Expr::let_in(
                d1.pattern.clone(),
                d1.expr.clone(),
                pair_with(Some(&d1.pattern), d2.expr.clone()),
            );
            vec![Definition::new(Pattern::pair(d1.pattern.clone(), d2.pattern.clone()), body)]
        }
        Rule::Elim(x) => {
            let Some(xv) = d1.pattern.vars().into_iter().find(|v| v.name() == x) else {
                return Err(violated(rule, pos, format!("`{x}` is not bound here")));
            };
            if !xv.is_positive() {
                return Err(violated(rule, pos, format!("`{x}` is not positive")));
            }
            if term.suffix_free_vars(pos + 1).iter().any(|v| v.name() == x) {
                return Err(violated(rule, pos, format!("`{x}` is still used later")));
            }
            let Some(rest) = d1.pattern.remove(x) else {
                return Err(violated(rule, pos, format!("removing `{x}` leaves an empty pattern")));
            };
            let body = Expr::let_in(d1.pattern.clone(), d1.expr.clone(), Expr::from_pattern(&rest));
            vec![Definition::new(rest, body)]
        }
    };
    let mut defs = Vec::with_capacity(term.defs.len() + 1);
    defs.extend_from_slice(&term.defs[..pos]);
    defs.extend(replacement);
    defs.extend_from_slice(&term.defs[pos + needs..]);
    Ok(LetTerm::new(defs, term.output.clone()))
}

/// The swap rule the definition-swapping procedure picks for the
/// definitions at `position` and `position + 1`.
pub fn sd_rule(term: &LetTerm, position: usize) -> Result<Rule, RewriteError> {
    if position + 2 > term.defs.len() {
        return Err(RewriteError::TooFewDefinitions);
    }
    let (d1, d2) = (&term.defs[position], &term.defs[position + 1]);
    let xs = shared(&d1.pattern, &d2.expr);
    Ok(if xs.is_empty() {
        Rule::Swap1
    } else if xs.iter().all(|v| v.is_positive()) {
        Rule::Swap2
    } else {
        Rule::Swap3
    })
}
