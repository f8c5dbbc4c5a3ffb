use std::collections::BTreeMap;
use std::fmt::Write;

use crate::ast::{Expr, LetTerm, Pattern, StochasticMatrix, Type, Variable};

/// Patterns print right-nested pairs flat: `(x, (y, z))` as `(x, y, z)`.
pub fn pattern_to_string(p: &Pattern) -> String {
    match p {
        Pattern::Var(v) => v.name().to_string(),
        Pattern::Pair(..) => format!("({})", spine(p).join(", ")),
    }
}

fn spine(p: &Pattern) -> Vec<String> {
    match p {
        Pattern::Pair(l, r) => {
            let mut out = vec![pattern_to_string(l)];
            out.extend(spine(r));
            out
        }
        Pattern::Var(v) => vec![v.name().to_string()],
    }
}

fn pair_spine<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Pair(a, b) => {
            out.push(a);
            pair_spine(b, out);
        }
        _ => out.push(e),
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_expr(s: &mut String, e: &Expr) {
    match e {
        Expr::Var(v) => s.push_str(v.name()),
        Expr::MatApp(m, args) => {
            let names: Vec<&str> = args.iter().map(|a| a.name()).collect();
            let _ = write!(s, "{}({})", m.name(), names.join(", "));
        }
        Expr::ArrowApp(f, args) => {
            let _ = write!(s, "{}({})", f.name(), spine(args).join(", "));
        }
        Expr::Pair(..) => {
            let mut items = Vec::new();
            pair_spine(e, &mut items);
            s.push('(');
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                write_expr(s, it);
            }
            s.push(')');
        }
        Expr::Lam(p, body) => {
            let _ = write!(s, "\\{}. ", pattern_to_string(p));
            write_expr(s, body);
        }
        Expr::Let(p, bound, body) => {
            let _ = write!(s, "let {} = ", pattern_to_string(p));
            write_bound(s, bound);
            s.push_str(" in ");
            write_expr(s, body);
        }
    }
}

/// Bound expressions that open a binder are parenthesized for readability.
fn write_bound(s: &mut String, e: &Expr) {
    if matches!(e, Expr::Let(..) | Expr::Lam(..)) {
        s.push('(');
        write_expr(s, e);
        s.push(')');
    } else {
        write_expr(s, e);
    }
}

/// The concise form: one `pattern = expr;` per line, then `in output`. A
/// term without definitions prints as its output pattern.
pub fn term_to_string(t: &LetTerm) -> String {
    if t.defs.is_empty() {
        return pattern_to_string(&t.output);
    }
    let mut s = String::new();
    for d in &t.defs {
        let _ = writeln!(s, "{} = {};", pattern_to_string(&d.pattern), expr_to_string(&d.expr));
    }
    let _ = write!(s, "in {}", pattern_to_string(&t.output));
    s
}

/// A type written for a matrix slot: tensors get parentheses so that `*`
/// keeps separating slots.
fn slot_type(t: &Type) -> String {
    match t {
        Type::Tensor(..) => format!("({t})"),
        _ => t.to_string(),
    }
}

pub fn matrix_decl(m: &StochasticMatrix) -> String {
    let slots: Vec<String> = m.slots().iter().map(slot_type).collect();
    let cols = m.cols();
    let rows: Vec<String> = m
        .entries()
        .chunks(cols)
        .map(|r| r.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", "))
        .collect();
    let sig = if slots.is_empty() {
        format!("-> {}", m.out())
    } else {
        format!("{} -> {}", slots.join(" * "), m.out())
    };
    format!("matrix {} : {} = [{}];", m.name(), sig, rows.join("; "))
}

/// A complete source file: matrix declarations, declarations for every
/// variable whose type is not `Bool`, then the term.
pub fn program_to_string(t: &LetTerm) -> String {
    let mut matrices: BTreeMap<String, &StochasticMatrix> = BTreeMap::new();
    let mut typed: BTreeMap<String, Type> = BTreeMap::new();
    let mut note = |v: &Variable| {
        if *v.ty() != Type::Bool {
            typed.insert(v.name().to_string(), v.ty().clone());
        }
    };
    fn walk<'a>(
        e: &'a Expr,
        mats: &mut BTreeMap<String, &'a StochasticMatrix>,
        note: &mut dyn FnMut(&Variable),
    ) {
        match e {
            Expr::Var(v) => note(v),
            Expr::MatApp(m, args) => {
                mats.insert(m.name().to_string(), m);
                args.iter().for_each(|v| note(v));
            }
            Expr::ArrowApp(f, args) => {
                note(f);
                args.vars().into_iter().for_each(|v| note(v));
            }
            Expr::Pair(a, b) => {
                walk(a, mats, note);
                walk(b, mats, note);
            }
            Expr::Lam(p, body) => {
                p.vars().into_iter().for_each(|v| note(v));
                walk(body, mats, note);
            }
            Expr::Let(p, bound, body) => {
                p.vars().into_iter().for_each(|v| note(v));
                walk(bound, mats, note);
                walk(body, mats, note);
            }
        }
    }
    for d in &t.defs {
        d.pattern.vars().into_iter().for_each(|v| note(v));
        walk(&d.expr, &mut matrices, &mut note);
    }
    t.output.vars().into_iter().for_each(|v| note(v));
    let mut s = String::new();
    for m in matrices.values() {
        let _ = writeln!(s, "{}", matrix_decl(m));
    }
    for (name, ty) in &typed {
        let _ = writeln!(s, "var {name} : {ty};");
    }
    if !s.is_empty() {
        s.push('\n');
    }
    s.push_str(&term_to_string(t));
    s.push('\n');
    s
}
