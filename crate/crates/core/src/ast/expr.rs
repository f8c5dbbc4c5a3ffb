use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use super::types::{Pattern, Type, Variable};
use super::AstError;

pub type VarSet = BTreeSet<Variable>;

/// Stochasticity tolerance on matrix rows.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// A named constant `M : P1 * ... * Pk -o Q` with a dense entry table.
///
/// Row `i` enumerates the joint input web in canonical order (slots left to
/// right, `true` before `false`); column `j` enumerates the output web.
#[derive(Clone, Debug, PartialEq)]
pub struct StochasticMatrix {
    name: String,
    slots: Vec<Type>,
    out: Type,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    pub fn new(
        name: impl Into<String>,
        slots: Vec<Type>,
        out: Type,
        entries: Vec<f64>,
    ) -> Result<Self, AstError> {
        let name = name.into();
        for t in slots.iter().chain(std::iter::once(&out)) {
            if !t.is_positive() {
                return Err(AstError::NonPositiveMatrixType {
                    matrix: name,
                    ty: t.clone(),
                });
            }
        }
        let rows = slots
            .iter()
            .try_fold(1usize, |acc, t| acc.checked_mul(t.web_size()?));
        let cols = out.web_size();
        let expected = rows.zip(cols).and_then(|(r, c)| r.checked_mul(c));
        if expected != Some(entries.len()) {
            return Err(AstError::MatrixShape {
                matrix: name,
                expected: expected.unwrap_or(usize::MAX),
                found: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(AstError::NegativeEntry {
                matrix: name,
                value: *bad,
            });
        }
        Ok(StochasticMatrix {
            name,
            slots,
            out,
            entries,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn slots(&self) -> &[Type] {
        &self.slots
    }

    pub fn out(&self) -> &Type {
        &self.out
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.slots.iter().map(|t| t.web_size().unwrap_or(0)).product()
    }

    pub fn cols(&self) -> usize {
        self.out.web_size().unwrap_or(0)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.cols() + col]
    }

    /// The type `P1 * ... * Pk -o Q`; the input is `None` for 0-ary matrices.
    pub fn input_type(&self) -> Option<Type> {
        Type::tensor_of(&self.slots)
    }

    /// Every row sums to one within `tol`.
    pub fn check_stochastic(&self, tol: f64) -> Result<(), AstError> {
        let cols = self.cols();
        for (row, chunk) in self.entries.chunks(cols).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > tol {
                return Err(AstError::NotStochastic {
                    matrix: self.name.clone(),
                    row,
                    sum,
                });
            }
        }
        Ok(())
    }
}

/// Expressions. Children sit behind `Arc` so rewriting shares untouched
/// subterms and denotations can be cached by node identity.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(Variable),
    MatApp(Arc<StochasticMatrix>, Vec<Variable>),
    ArrowApp(Variable, Pattern),
    Pair(Arc<Expr>, Arc<Expr>),
    Lam(Pattern, Arc<Expr>),
    Let(Pattern, Arc<Expr>, Arc<Expr>),
}

impl Expr {
    pub fn var(v: Variable) -> Arc<Expr> {
        Arc::new(Expr::Var(v))
    }

    pub fn pair(a: Arc<Expr>, b: Arc<Expr>) -> Arc<Expr> {
        Arc::new(Expr::Pair(a, b))
    }

    pub fn lam(p: Pattern, body: Arc<Expr>) -> Arc<Expr> {
        Arc::new(Expr::Lam(p, body))
    }

    pub fn let_in(p: Pattern, bound: Arc<Expr>, body: Arc<Expr>) -> Arc<Expr> {
        Arc::new(Expr::Let(p, bound, body))
    }

    pub fn mat_app(m: Arc<StochasticMatrix>, args: Vec<Variable>) -> Arc<Expr> {
        Arc::new(Expr::MatApp(m, args))
    }

    pub fn arrow_app(f: Variable, args: Pattern) -> Arc<Expr> {
        Arc::new(Expr::ArrowApp(f, args))
    }

    /// A pattern read as an expression (variables and pairs).
    pub fn from_pattern(p: &Pattern) -> Arc<Expr> {
        match p {
            Pattern::Var(v) => Expr::var(v.clone()),
            Pattern::Pair(l, r) => Expr::pair(Expr::from_pattern(l), Expr::from_pattern(r)),
        }
    }

    /// The pattern this expression spells, if it is built from variables and
    /// pairs only.
    pub fn as_pattern(&self) -> Option<Pattern> {
        match self {
            Expr::Var(v) => Some(Pattern::Var(v.clone())),
            Expr::Pair(l, r) => Some(Pattern::pair(l.as_pattern()?, r.as_pattern()?)),
            _ => None,
        }
    }

    pub fn free_vars(&self) -> VarSet {
        let mut out = VarSet::new();
        self.add_free_vars(&mut out);
        out
    }

    fn add_free_vars(&self, out: &mut VarSet) {
        match self {
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::MatApp(_, args) => out.extend(args.iter().cloned()),
            Expr::ArrowApp(f, args) => {
                out.insert(f.clone());
                out.extend(args.vars().into_iter().cloned());
            }
            Expr::Pair(a, b) => {
                a.add_free_vars(out);
                b.add_free_vars(out);
            }
            Expr::Lam(p, body) => {
                let mut inner = body.free_vars();
                remove_pattern(&mut inner, p);
                out.extend(inner);
            }
            Expr::Let(p, bound, body) => {
                bound.add_free_vars(out);
                let mut inner = body.free_vars();
                remove_pattern(&mut inner, p);
                out.extend(inner);
            }
        }
    }

    pub fn free_arrow_vars(&self) -> VarSet {
        self.free_vars().into_iter().filter(|v| v.is_arrow()).collect()
    }

    pub fn has_free(&self, name: &str) -> bool {
        self.free_vars().iter().any(|v| v.name() == name)
    }

    /// Term size: variables count one, applications one plus their
    /// arguments, every other node the sum of its parts.
    pub fn size(&self) -> usize {
        match self {
            Expr::Var(_) => 1,
            Expr::MatApp(_, args) => 1 + args.len(),
            Expr::ArrowApp(_, args) => 1 + args.len(),
            Expr::Pair(a, b) => a.size() + b.size(),
            Expr::Lam(p, body) => p.len() + body.size(),
            Expr::Let(p, bound, body) => p.len() + bound.size() + body.size(),
        }
    }

    /// Renames free occurrences according to `map` (by name). The caller
    /// guarantees the targets are not captured by inner binders.
    pub fn rename_free(self: &Arc<Expr>, map: &HashMap<String, Variable>) -> Arc<Expr> {
        if map.is_empty() {
            return self.clone();
        }
        let sub = |v: &Variable| map.get(v.name()).cloned();
        match &**self {
            Expr::Var(v) => match sub(v) {
                Some(w) => Expr::var(w),
                None => self.clone(),
            },
            Expr::MatApp(m, args) => Expr::mat_app(
                m.clone(),
                args.iter().map(|v| sub(v).unwrap_or_else(|| v.clone())).collect(),
            ),
            Expr::ArrowApp(f, args) => Expr::arrow_app(
                sub(f).unwrap_or_else(|| f.clone()),
                args.rename(&|v| sub(v)),
            ),
            Expr::Pair(a, b) => Expr::pair(a.rename_free(map), b.rename_free(map)),
            Expr::Lam(p, body) => {
                let inner = shadowed(map, p);
                Expr::lam(p.clone(), body.rename_free(&inner))
            }
            Expr::Let(p, bound, body) => {
                let inner = shadowed(map, p);
                Expr::let_in(p.clone(), bound.rename_free(map), body.rename_free(&inner))
            }
        }
    }

    /// Every variable name occurring anywhere, bound or free.
    pub fn all_names(&self, out: &mut BTreeSet<String>) {
        let add_pat = |p: &Pattern, out: &mut BTreeSet<String>| {
            for v in p.vars() {
                out.insert(v.name().to_string());
            }
        };
        match self {
            Expr::Var(v) => {
                out.insert(v.name().to_string());
            }
            Expr::MatApp(_, args) => {
                for v in args {
                    out.insert(v.name().to_string());
                }
            }
            Expr::ArrowApp(f, args) => {
                out.insert(f.name().to_string());
                add_pat(args, out);
            }
            Expr::Pair(a, b) => {
                a.all_names(out);
                b.all_names(out);
            }
            Expr::Lam(p, body) => {
                add_pat(p, out);
                body.all_names(out);
            }
            Expr::Let(p, bound, body) => {
                add_pat(p, out);
                bound.all_names(out);
                body.all_names(out);
            }
        }
    }
}

fn shadowed(map: &HashMap<String, Variable>, p: &Pattern) -> HashMap<String, Variable> {
    let mut inner = map.clone();
    for v in p.vars() {
        inner.remove(v.name());
    }
    inner
}

fn remove_pattern(set: &mut VarSet, p: &Pattern) {
    set.retain(|v| !p.contains(v.name()));
}

/// One definition `pattern = expr` of a let-term.
#[derive(Clone, Debug, PartialEq)]
pub struct Definition {
    pub pattern: Pattern,
    pub expr: Arc<Expr>,
}

impl Definition {
    pub fn new(pattern: Pattern, expr: Arc<Expr>) -> Self {
        Definition { pattern, expr }
    }
}

/// `p1 = e1; ...; pn = en in output`.
#[derive(Clone, Debug, PartialEq)]
pub struct LetTerm {
    pub defs: Vec<Definition>,
    pub output: Pattern,
}

impl LetTerm {
    pub fn new(defs: Vec<Definition>, output: Pattern) -> Self {
        LetTerm { defs, output }
    }

    /// The nested `let ... in` expression.
    pub fn to_expr(&self) -> Arc<Expr> {
        self.suffix_expr(0)
    }

    /// Expression of the let-term made of definitions `k..` and the output.
    pub fn suffix_expr(&self, k: usize) -> Arc<Expr> {
        self.defs[k..]
            .iter()
            .rev()
            .fold(Expr::from_pattern(&self.output), |body, d| {
                Expr::let_in(d.pattern.clone(), d.expr.clone(), body)
            })
    }

    /// Peels top-level lets whose body continues as a let-term and ends in a
    /// pattern.
    pub fn from_expr(e: &Arc<Expr>) -> Option<LetTerm> {
        let mut defs = Vec::new();
        let mut cur = e.clone();
        loop {
            match &*cur {
                Expr::Let(p, bound, body) => {
                    defs.push(Definition::new(p.clone(), bound.clone()));
                    let next = body.clone();
                    cur = next;
                }
                _ => {
                    let output = cur.as_pattern()?;
                    return Some(LetTerm::new(defs, output));
                }
            }
        }
    }

    pub fn free_vars(&self) -> VarSet {
        self.suffix_free_vars(0)
    }

    /// Free variables of the let-term made of definitions `k..`.
    pub fn suffix_free_vars(&self, k: usize) -> VarSet {
        let mut fv: VarSet = self.output.vars().into_iter().cloned().collect();
        for d in self.defs[k..].iter().rev() {
            remove_pattern(&mut fv, &d.pattern);
            fv.extend(d.expr.free_vars());
        }
        fv
    }

    pub fn free_arrow_vars(&self) -> VarSet {
        self.free_vars().into_iter().filter(|v| v.is_arrow()).collect()
    }

    pub fn output_vars(&self) -> VarSet {
        self.output.vars().into_iter().cloned().collect()
    }

    /// Variables bound by the top-level definitions, in order.
    pub fn defined_vars(&self) -> Vec<Variable> {
        self.defs
            .iter()
            .flat_map(|d| d.pattern.vars().into_iter().cloned())
            .collect()
    }

    /// Index of the definition binding `name`.
    pub fn definition_of(&self, name: &str) -> Option<usize> {
        self.defs.iter().position(|d| d.pattern.contains(name))
    }

    pub fn is_positive(&self) -> bool {
        self.output.is_positive()
    }

    pub fn size(&self) -> usize {
        self.defs
            .iter()
            .map(|d| d.pattern.len() + d.expr.size())
            .sum::<usize>()
            + self.output.len()
    }

    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for d in &self.defs {
            for v in d.pattern.vars() {
                out.insert(v.name().to_string());
            }
            d.expr.all_names(&mut out);
        }
        for v in self.output.vars() {
            out.insert(v.name().to_string());
        }
        out
    }

    /// Positive variables that can be handed to the elimination strategy:
    /// defined, outside the output, and not the sole leaf of an unused
    /// definition.
    pub fn eliminable_vars(&self) -> Vec<Variable> {
        let output = &self.output_vars();
        self.defs
            .iter()
            .enumerate()
            .flat_map(|(i, d)| {
                d.pattern
                    .vars()
                    .into_iter()
                    .filter(move |v| v.is_positive() && !output.contains(*v))
                    .filter(move |v| {
                        d.pattern.len() > 1
                            || self.suffix_free_vars(i + 1).iter().any(|w| w.name() == v.name())
                    })
                    .cloned()
            })
            .collect()
    }
}

impl fmt::Display for LetTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::frontend::pretty::term_to_string(self))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::frontend::pretty::expr_to_string(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(n: &str) -> Variable {
        Variable::bool(n)
    }

    fn coin(name: &str, p: f64) -> Arc<StochasticMatrix> {
        Arc::new(StochasticMatrix::new(name, vec![], Type::Bool, vec![p, 1.0 - p]).unwrap())
    }

    #[test]
    fn free_vars_of_let() {
        let f = Variable::new("f", Type::arrow(Type::Bool, Type::Bool));
        // let y = f x in (z, y)
        let e = Expr::let_in(
            Pattern::Var(bx("y")),
            Expr::arrow_app(f.clone(), Pattern::Var(bx("x"))),
            Expr::pair(Expr::var(bx("z")), Expr::var(bx("y"))),
        );
        let names: Vec<_> = e.free_vars().iter().map(|v| v.name().to_string()).collect();
        assert_eq!(names, ["f", "x", "z"]);
        assert_eq!(e.free_arrow_vars().len(), 1);
    }

    #[test]
    fn lam_binds_its_pattern() {
        let m6 = Arc::new(
            StochasticMatrix::new(
                "M6",
                vec![Type::Bool, Type::Bool],
                Type::Bool,
                vec![0.5; 8],
            )
            .unwrap(),
        );
        let lam = Expr::lam(
            Pattern::Var(bx("x")),
            Expr::mat_app(m6, vec![bx("x2"), bx("x")]),
        );
        assert!(lam.free_arrow_vars().is_empty());
        assert_eq!(lam.free_vars().len(), 1);
    }

    #[test]
    fn size_clauses() {
        assert_eq!(Expr::var(bx("x")).size(), 1);
        let m3 = Arc::new(
            StochasticMatrix::new("M3", vec![Type::Bool], Type::Bool, vec![0.5; 4]).unwrap(),
        );
        assert_eq!(Expr::mat_app(m3, vec![bx("x2")]).size(), 2);
        let m2 = Arc::new(
            StochasticMatrix::new("M2", vec![Type::Bool], Type::Bool, vec![0.5; 4]).unwrap(),
        );
        // let x1 = M1 in (x1, M2(x1))
        let e = Expr::let_in(
            Pattern::Var(bx("x1")),
            Expr::mat_app(coin("M1", 0.3), vec![]),
            Expr::pair(Expr::var(bx("x1")), Expr::mat_app(m2, vec![bx("x1")])),
        );
        assert_eq!(e.size(), 5);
    }

    #[test]
    fn matrix_validation() {
        assert!(StochasticMatrix::new("M", vec![Type::Bool], Type::Bool, vec![0.5; 3]).is_err());
        assert!(StochasticMatrix::new("M", vec![], Type::Bool, vec![-0.1, 1.1]).is_err());
        let skew = StochasticMatrix::new("M", vec![], Type::Bool, vec![0.5, 0.6]).unwrap();
        assert!(skew.check_stochastic(ROW_SUM_TOL).is_err());
        assert!(coin("C", 0.3).check_stochastic(ROW_SUM_TOL).is_ok());
    }

    #[test]
    fn let_term_round_trips_through_expr() {
        let t = LetTerm::new(
            vec![
                Definition::new(Pattern::Var(bx("x")), Expr::mat_app(coin("C", 0.3), vec![])),
                Definition::new(Pattern::Var(bx("y")), Expr::var(bx("x"))),
            ],
            Pattern::pair(Pattern::Var(bx("x")), Pattern::Var(bx("y"))),
        );
        let back = LetTerm::from_expr(&t.to_expr()).unwrap();
        assert_eq!(back, t);
        assert!(t.free_vars().is_empty());
        assert_eq!(t.suffix_free_vars(1).len(), 1);
    }
}
