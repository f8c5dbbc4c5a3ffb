use std::collections::HashMap;

use crate::ast::{Expr, LetTerm, Pattern, Variable};

/// Equality up to a consistent, bijective renaming of variable names
/// (free and bound alike). Types and matrices must match exactly.
pub fn alpha_eq(a: &LetTerm, b: &LetTerm) -> bool {
    let mut m = Bijection::default();
    a.defs.len() == b.defs.len()
        && a
            .defs
            .iter()
            .zip(&b.defs)
            .all(|(x, y)| m.pattern(&x.pattern, &y.pattern) && m.expr(&x.expr, &y.expr))
        && m.pattern(&a.output, &b.output)
}

#[derive(Default)]
struct Bijection {
    fwd: HashMap<String, String>,
    bwd: HashMap<String, String>,
}

impl Bijection {
    fn var(&mut self, a: &Variable, b: &Variable) -> bool {
        if a.ty() != b.ty() {
            return false;
        }
        match (self.fwd.get(a.name()), self.bwd.get(b.name())) {
            (Some(x), Some(y)) => x == b.name() && y == a.name(),
            (None, None) => {
                self.fwd.insert(a.name().to_string(), b.name().to_string());
                self.bwd.insert(b.name().to_string(), a.name().to_string());
                true
            }
            _ => false,
        }
    }

    fn pattern(&mut self, a: &Pattern, b: &Pattern) -> bool {
        match (a, b) {
            (Pattern::Var(x), Pattern::Var(y)) => self.var(x, y),
            (Pattern::Pair(a1, a2), Pattern::Pair(b1, b2)) => self.pattern(a1, b1) && self.pattern(a2, b2),
            _ => false,
        }
    }

    fn expr(&mut self, a: &Expr, b: &Expr) -> bool {
        match (a, b) {
            (Expr::Var(x), Expr::Var(y)) => self.var(x, y),
            (Expr::MatApp(m, xs), Expr::MatApp(n, ys)) => {
                (std::ptr::eq(&**m, &**n) || (m.name() == n.name() && m.entries() == n.entries()))
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.var(x, y))
            }
            (Expr::ArrowApp(f, p), Expr::ArrowApp(g, q)) => self.var(f, g) && self.pattern(p, q),
            (Expr::Pair(a1, a2), Expr::Pair(b1, b2)) => self.expr(a1, b1) && self.expr(a2, b2),
            (Expr::Lam(p, e), Expr::Lam(q, f)) => self.pattern(p, q) && self.expr(e, f),
            (Expr::Let(p, e1, e2), Expr::Let(q, f1, f2)) => {
                self.pattern(p, q) && self.expr(e1, f1) && self.expr(e2, f2)
            }
            _ => false,
        }
    }
}
