use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use super::expr::{Definition, Expr, LetTerm};
use super::types::{Pattern, Variable};

const SEP: &str = "__";

/// Splits `base__k` into `(base, Some(k))`.
pub fn split_suffix(name: &str) -> (&str, Option<usize>) {
    if let Some(pos) = name.rfind(SEP) {
        let (base, digits) = (&name[..pos], &name[pos + SEP.len()..]);
        if !base.is_empty() && !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(k) = digits.parse() {
                return (base, Some(k));
            }
        }
    }
    (name, None)
}

/// Deterministic generator of `base__k` names. The counter starts above
/// every suffix already present in the term, so a name it hands out never
/// clashes with an existing one.
#[derive(Clone, Debug)]
pub struct FreshNames {
    next: usize,
    taken: BTreeSet<String>,
}

impl FreshNames {
    pub fn for_term(term: &LetTerm) -> Self {
        Self::from_names(term.all_names())
    }

    pub fn from_names(taken: BTreeSet<String>) -> Self {
        let next = taken
            .iter()
            .filter_map(|n| split_suffix(n).1)
            .max()
            .map_or(1, |k| k + 1);
        FreshNames { next, taken }
    }

    pub fn fresh(&mut self, base: &str) -> String {
        let base = split_suffix(base).0;
        loop {
            let name = format!("{base}{SEP}{}", self.next);
            self.next += 1;
            if self.taken.insert(name.clone()) {
                return name;
            }
        }
    }

    pub fn fresh_var(&mut self, like: &Variable) -> Variable {
        like.renamed(self.fresh(like.name()))
    }
}

/// Renames binders so that every bound name is distinct from every other
/// bound name and from the free variables. The first binder of a name keeps
/// it; later ones get `base__k` with the smallest free `k`.
pub fn canonicalize(term: &LetTerm) -> LetTerm {
    let mut used: BTreeSet<String> = term.free_vars().iter().map(|v| v.name().to_string()).collect();
    let all = term.all_names();
    let mut st = Renamer {
        used: &mut used,
        all: &all,
    };
    let mut env: HashMap<String, Variable> = HashMap::new();
    let mut defs = Vec::with_capacity(term.defs.len());
    for d in &term.defs {
        let expr = st.expr(&d.expr, &env);
        let pattern = st.bind(&d.pattern, &mut env);
        defs.push(Definition::new(pattern, expr));
    }
    let output = subst_pattern(&term.output, &env);
    LetTerm::new(defs, output)
}

struct Renamer<'a> {
    used: &'a mut BTreeSet<String>,
    all: &'a BTreeSet<String>,
}

impl Renamer<'_> {
    fn bind(&mut self, p: &Pattern, env: &mut HashMap<String, Variable>) -> Pattern {
        let mut renamed = HashMap::new();
        for v in p.vars() {
            let name = if self.used.contains(v.name()) {
                let base = split_suffix(v.name()).0.to_string();
                (1..)
                    .map(|k| format!("{base}{SEP}{k}"))
                    .find(|n| !self.used.contains(n) && !self.all.contains(n))
                    .unwrap()
            } else {
                v.name().to_string()
            };
            self.used.insert(name.clone());
            let nv = v.renamed(&name);
            renamed.insert(v.name().to_string(), nv.clone());
            env.insert(v.name().to_string(), nv);
        }
        p.rename(&|v| renamed.get(v.name()).cloned())
    }

    fn expr(&mut self, e: &Arc<Expr>, env: &HashMap<String, Variable>) -> Arc<Expr> {
        let sub = |v: &Variable| env.get(v.name()).cloned().unwrap_or_else(|| v.clone());
        match &**e {
            Expr::Var(v) => Expr::var(sub(v)),
            Expr::MatApp(m, args) => Expr::mat_app(m.clone(), args.iter().map(sub).collect()),
            Expr::ArrowApp(f, args) => Expr::arrow_app(sub(f), subst_pattern(args, env)),
            Expr::Pair(a, b) => {
                let a = self.expr(a, env);
                Expr::pair(a, self.expr(b, env))
            }
            Expr::Lam(p, body) => {
                let mut inner = env.clone();
                let p = self.bind(p, &mut inner);
                Expr::lam(p, self.expr(body, &inner))
            }
            Expr::Let(p, bound, body) => {
                let bound = self.expr(bound, env);
                let mut inner = env.clone();
                let p = self.bind(p, &mut inner);
                Expr::let_in(p, bound, self.expr(body, &inner))
            }
        }
    }
}

fn subst_pattern(p: &Pattern, env: &HashMap<String, Variable>) -> Pattern {
    p.rename(&|v| env.get(v.name()).cloned())
}

/// Top-level binders are pairwise distinct and distinct from the free
/// variables. This is the precondition of factor extraction.
pub fn has_distinct_binders(term: &LetTerm) -> bool {
    let free = term.free_vars();
    let mut seen = BTreeSet::new();
    term.defs.iter().all(|d| {
        d.pattern
            .vars()
            .into_iter()
            .all(|v| !free.iter().any(|w| w.name() == v.name()) && seen.insert(v.name().to_string()))
    })
}

/// Every binder in the term, top level or nested, binds a name used by no
/// other binder and by no free variable.
pub fn is_canonical(term: &LetTerm) -> bool {
    canonicalize(term) == *term
}
