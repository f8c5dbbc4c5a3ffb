use std::collections::HashMap;

use super::expr::{Expr, LetTerm, VarSet};
use super::types::{Pattern, Type, Variable};
use super::AstError;

/// Type of a let-term; see [`typecheck_expr`].
pub fn typecheck(term: &LetTerm) -> Result<Type, AstError> {
    typecheck_expr(&term.to_expr())
}

/// Church-style type checking with arrow linearity.
///
/// Positive variables may be shared freely between the premises of binary
/// rules; arrow variables may not, and a let binding an arrow variable must
/// use it in its body.
pub fn typecheck_expr(e: &Expr) -> Result<Type, AstError> {
    check_consistent_types(e)?;
    infer(e)
}

fn infer(e: &Expr) -> Result<Type, AstError> {
    match e {
        Expr::Var(v) => {
            if !v.ty().is_variable_type() {
                return Err(AstError::IllFormedVariableType {
                    var: v.name().to_string(),
                    ty: v.ty().clone(),
                });
            }
            Ok(v.ty().clone())
        }
        Expr::MatApp(m, args) => {
            if args.len() != m.slots().len() {
                return Err(AstError::ApplicationMismatch {
                    head: m.name().to_string(),
                    expected: m.input_type().map(|t| t.to_string()).unwrap_or_default(),
                    found: arg_types(args),
                });
            }
            for (a, slot) in args.iter().zip(m.slots()) {
                if a.ty() != slot {
                    return Err(AstError::ApplicationMismatch {
                        head: m.name().to_string(),
                        expected: m.input_type().map(|t| t.to_string()).unwrap_or_default(),
                        found: arg_types(args),
                    });
                }
            }
            Ok(m.out().clone())
        }
        Expr::ArrowApp(f, args) => {
            check_pattern(args)?;
            let Type::Arrow(input, result) = f.ty() else {
                return Err(AstError::ApplicationMismatch {
                    head: f.name().to_string(),
                    expected: "an arrow type".to_string(),
                    found: f.ty().to_string(),
                });
            };
            let at = args.ty();
            if !args.is_positive() || at != **input {
                return Err(AstError::ApplicationMismatch {
                    head: f.name().to_string(),
                    expected: input.to_string(),
                    found: at.to_string(),
                });
            }
            Ok((**result).clone())
        }
        Expr::Pair(a, b) => {
            let ta = infer(a)?;
            if !ta.is_positive() {
                return Err(AstError::NonPositiveLeft { ty: ta });
            }
            let tb = infer(b)?;
            disjoint_arrows(&a.free_arrow_vars(), &b.free_arrow_vars())?;
            Ok(Type::tensor(ta, tb))
        }
        Expr::Lam(p, body) => {
            check_pattern(p)?;
            if !p.is_positive() {
                return Err(AstError::NonPositiveLamParam {
                    pattern: p.to_string(),
                });
            }
            let tb = infer(body)?;
            Ok(Type::arrow(p.ty(), tb))
        }
        Expr::Let(p, bound, body) => {
            check_pattern(p)?;
            let tb = infer(bound)?;
            if tb != p.ty() {
                return Err(AstError::PatternTypeMismatch {
                    pattern: p.to_string(),
                    pattern_ty: p.ty(),
                    expr_ty: tb,
                });
            }
            let body_arrows = body.free_arrow_vars();
            disjoint_arrows(&bound.free_arrow_vars(), &body_arrows)?;
            if let Some(f) = p.arrow_var() {
                if !body_arrows.contains(f) {
                    return Err(AstError::UnusedArrowBinder {
                        var: f.name().to_string(),
                    });
                }
            }
            infer(body)
        }
    }
}

fn arg_types(args: &[Variable]) -> String {
    let tys: Vec<String> = args.iter().map(|a| a.ty().to_string()).collect();
    format!("({})", tys.join(", "))
}

fn disjoint_arrows(a: &VarSet, b: &VarSet) -> Result<(), AstError> {
    match a.intersection(b).next() {
        Some(f) => Err(AstError::ArrowSharing {
            var: f.name().to_string(),
        }),
        None => Ok(()),
    }
}

/// Distinct variables, each of variable type, with at most one arrow in
/// rightmost position.
pub fn check_pattern(p: &Pattern) -> Result<(), AstError> {
    let vars = p.vars();
    for (i, v) in vars.iter().enumerate() {
        if !v.ty().is_variable_type() {
            return Err(AstError::IllFormedVariableType {
                var: v.name().to_string(),
                ty: v.ty().clone(),
            });
        }
        if vars[..i].iter().any(|w| w.name() == v.name()) {
            return Err(AstError::DuplicatePatternVariable {
                var: v.name().to_string(),
            });
        }
    }
    fn left_positive(p: &Pattern) -> bool {
        match p {
            Pattern::Var(_) => true,
            Pattern::Pair(l, r) => l.is_positive() && left_positive(r),
        }
    }
    if !left_positive(p) {
        return Err(AstError::MalformedPattern {
            pattern: p.to_string(),
        });
    }
    Ok(())
}

/// Every occurrence of a name, bound or free, carries the same type.
pub fn check_consistent_types(e: &Expr) -> Result<(), AstError> {
    let mut seen: HashMap<String, Type> = HashMap::new();
    let mut visit = |v: &Variable| -> Result<(), AstError> {
        match seen.get(v.name()) {
            Some(t) if t != v.ty() => Err(AstError::InconsistentVariableType {
                var: v.name().to_string(),
                first: t.clone(),
                second: v.ty().clone(),
            }),
            Some(_) => Ok(()),
            None => {
                seen.insert(v.name().to_string(), v.ty().clone());
                Ok(())
            }
        }
    };
    walk_vars(e, &mut visit)
}

fn walk_vars(
    e: &Expr,
    visit: &mut dyn FnMut(&Variable) -> Result<(), AstError>,
) -> Result<(), AstError> {
    match e {
        Expr::Var(v) => visit(v),
        Expr::MatApp(_, args) => args.iter().try_for_each(|v| visit(v)),
        Expr::ArrowApp(f, args) => {
            visit(f)?;
            args.vars().into_iter().try_for_each(|v| visit(v))
        }
        Expr::Pair(a, b) => {
            walk_vars(a, visit)?;
            walk_vars(b, visit)
        }
        Expr::Lam(p, body) => {
            p.vars().into_iter().try_for_each(|v| visit(v))?;
            walk_vars(body, visit)
        }
        Expr::Let(p, bound, body) => {
            p.vars().into_iter().try_for_each(|v| visit(v))?;
            walk_vars(bound, visit)?;
            walk_vars(body, visit)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::StochasticMatrix;
    use std::sync::Arc;

    fn dup_term(ty: Type) -> Arc<Expr> {
        let v = Variable::new("v", ty.clone());
        let w = Variable::new("w", ty);
        Expr::let_in(
            Pattern::Var(w.clone()),
            Expr::var(v.clone()),
            Expr::pair(Expr::var(v), Expr::var(w)),
        )
    }

    #[test]
    fn positive_duplication_types() {
        let t = typecheck_expr(&dup_term(Type::Bool)).unwrap();
        assert_eq!(t, Type::tensor(Type::Bool, Type::Bool));
    }

    #[test]
    fn arrow_duplication_rejected() {
        let err = typecheck_expr(&dup_term(Type::arrow(Type::Bool, Type::Bool))).unwrap_err();
        assert!(matches!(err, AstError::ArrowSharing { .. }), "{err}");
    }

    #[test]
    fn single_variable() {
        assert_eq!(typecheck_expr(&Expr::Var(Variable::bool("x"))).unwrap(), Type::Bool);
    }

    #[test]
    fn unused_arrow_binder() {
        let f = Variable::new("f", Type::arrow(Type::Bool, Type::Bool));
        let m = Arc::new(StochasticMatrix::new("M", vec![], Type::Bool, vec![0.5, 0.5]).unwrap());
        let lam = Expr::lam(Pattern::Var(Variable::bool("y")), Expr::mat_app(m.clone(), vec![]));
        let e = Expr::let_in(Pattern::Var(f), lam, Expr::mat_app(m, vec![]));
        assert!(matches!(
            typecheck_expr(&e).unwrap_err(),
            AstError::UnusedArrowBinder { .. }
        ));
    }

    #[test]
    fn arrow_application() {
        let f = Variable::new("f", Type::arrow(Type::Bool, Type::Bool));
        let ok = Expr::arrow_app(f.clone(), Pattern::Var(Variable::bool("x")));
        assert_eq!(typecheck_expr(&ok).unwrap(), Type::Bool);
        let bad = Expr::arrow_app(
            f,
            Pattern::pair(
                Pattern::Var(Variable::bool("x")),
                Pattern::Var(Variable::bool("y")),
            ),
        );
        assert!(matches!(
            typecheck_expr(&bad).unwrap_err(),
            AstError::ApplicationMismatch { .. }
        ));
    }

    #[test]
    fn inconsistent_types() {
        let e = Expr::pair(
            Expr::var(Variable::bool("x")),
            Expr::var(Variable::new("x", Type::arrow(Type::Bool, Type::Bool))),
        );
        assert!(matches!(
            typecheck_expr(&e).unwrap_err(),
            AstError::InconsistentVariableType { .. }
        ));
    }

    #[test]
    fn malformed_patterns() {
        let f = Variable::new("f", Type::arrow(Type::Bool, Type::Bool));
        let p = Pattern::pair(Pattern::Var(f), Pattern::Var(Variable::bool("x")));
        assert!(matches!(check_pattern(&p), Err(AstError::MalformedPattern { .. })));
        let d = Pattern::pair(
            Pattern::Var(Variable::bool("x")),
            Pattern::Var(Variable::bool("x")),
        );
        assert!(matches!(
            check_pattern(&d),
            Err(AstError::DuplicatePatternVariable { .. })
        ));
    }
}
