use std::sync::Arc;

use crate::ast::{Definition, Expr, LetTerm, Pattern};

/// Removes administrative lets left behind by rewriting, inside definition
/// bodies only (top-level definitions are kept as they are):
///
/// - `let p = e in p` becomes `e`;
/// - `let p = p in e` becomes `e`;
/// - `let p = (let r = e0 in e1) in q` floats to `let r = e0 in let p = e1 in q`
///   when `r` captures nothing free in `q`;
/// - `let (p1, p2) = (a, b) in q` splits into two lets when one order keeps
///   the bound expressions free of the other binder.
pub fn simplify(term: &LetTerm) -> LetTerm {
    let defs = term
        .defs
        .iter()
        .map(|d| Definition::new(d.pattern.clone(), simplify_expr(&d.expr)))
        .collect();
    LetTerm::new(defs, term.output.clone())
}

pub fn simplify_expr(e: &Arc<Expr>) -> Arc<Expr> {
    let mut cur = e.clone();
    for _ in 0..32 {
        let next = simp(&cur);
        if next == cur {
            break;
        }
        cur = next;
    }
    cur
}

fn simp(e: &Arc<Expr>) -> Arc<Expr> {
    match &**e {
        Expr::Var(_) | Expr::MatApp(..) | Expr::ArrowApp(..) => e.clone(),
        Expr::Pair(a, b) => Expr::pair(simp(a), simp(b)),
        Expr::Lam(p, body) => Expr::lam(p.clone(), simp(body)),
        Expr::Let(p, bound, body) => reduce_let(p, simp(bound), simp(body)),
    }
}

fn binds_free(p: &Pattern, e: &Expr) -> bool {
    p.vars().iter().any(|v| e.has_free(v.name()))
}

fn reduce_let(p: &Pattern, bound: Arc<Expr>, body: Arc<Expr>) -> Arc<Expr> {
    if body.as_pattern().as_ref() == Some(p) {
        return bound;
    }
    if bound.as_pattern().as_ref() == Some(p) {
        return body;
    }
    match (&*bound, p) {
        (Expr::Let(r, e0, e1), _) => {
            let captured = r.vars().iter().any(|v| !p.contains(v.name()) && body.has_free(v.name()));
            if !captured {
                return Expr::let_in(r.clone(), e0.clone(), reduce_let(p, e1.clone(), body));
            }
        }
        (Expr::Pair(a, b), Pattern::Pair(p1, p2)) => {
            if a.as_pattern().as_ref() == Some(&**p1) || !binds_free(p1, b) {
                let inner = reduce_let(p2, b.clone(), body);
                return reduce_let(p1, a.clone(), inner);
            }
            if !binds_free(p2, a) {
                let inner = reduce_let(p1, a.clone(), body);
                return reduce_let(p2, b.clone(), inner);
            }
        }
        _ => {}
    }
    Expr::let_in(p.clone(), bound, body)
}
