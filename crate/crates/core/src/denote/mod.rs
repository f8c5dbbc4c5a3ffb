//! Weighted-relational semantics: every expression denotes a nonnegative
//! matrix from the web of its free variables to the web of its type.

mod relation;
pub mod web;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::ast::{AstError, Expr, LetTerm, Pattern, Type, Variable};
use web::{projection, space_size, Odometer};

pub use relation::{RelationJson, WeightedRelation};
pub use web::{enumerate_assignments, enumerate_web, Assignment, WebElement};

/// Default bound on the number of cells of any table built.
pub const DEFAULT_WEB_CAP: usize = 1 << 20;

/// Absolute tolerance for comparing real results.
pub const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DenoteError {
    #[error("table of {size} cells exceeds the web cap of {cap}")]
    WebCapExceeded { size: usize, cap: usize },
    #[error("expression has free variables: {vars}")]
    NotClosed { vars: String },
    #[error("ill-typed term: {0}")]
    IllTyped(#[from] AstError),
}

impl DenoteError {
    /// The failure is a size limit rather than a wrong input.
    pub fn is_web_cap(&self) -> bool {
        matches!(self, DenoteError::WebCapExceeded { .. })
    }
}

/// Computes denotations, caching them per subterm node. A node's
/// denotation depends only on the node, so shared `Arc` subterms are
/// computed once.
pub struct Denoter {
    cap: usize,
    ops: u64,
    max_table: usize,
    memo: HashMap<usize, (Arc<Expr>, Arc<WeightedRelation>)>,
}

impl Default for Denoter {
    fn default() -> Self {
        Self::new(DEFAULT_WEB_CAP)
    }
}

impl Denoter {
    pub fn new(cap: usize) -> Self {
        Denoter {
            cap,
            ops: 0,
            max_table: 0,
            memo: HashMap::new(),
        }
    }

    /// Scalar multiplications performed so far.
    pub fn ops(&self) -> u64 {
        self.ops
    }

    /// Largest table built so far.
    pub fn max_table(&self) -> usize {
        self.max_table
    }

    pub fn denote_term(&mut self, term: &LetTerm) -> Result<Arc<WeightedRelation>, DenoteError> {
        self.denote(&term.to_expr())
    }

    pub fn denote(&mut self, e: &Arc<Expr>) -> Result<Arc<WeightedRelation>, DenoteError> {
        let key = Arc::as_ptr(e) as usize;
        if let Some((_, r)) = self.memo.get(&key) {
            return Ok(r.clone());
        }
        let r = Arc::new(self.compute(e)?);
        self.memo.insert(key, (e.clone(), r.clone()));
        Ok(r)
    }

    fn check_cap(&mut self, radices: &[usize]) -> Result<usize, DenoteError> {
        match space_size(radices) {
            Some(n) if n <= self.cap => {
                self.max_table = self.max_table.max(n);
                Ok(n)
            }
            n => Err(DenoteError::WebCapExceeded {
                size: n.unwrap_or(usize::MAX),
                cap: self.cap,
            }),
        }
    }

    fn check_loop(&self, radices: &[usize]) -> Result<(), DenoteError> {
        match space_size(radices) {
            Some(n) if n <= self.cap => Ok(()),
            n => Err(DenoteError::WebCapExceeded {
                size: n.unwrap_or(usize::MAX),
                cap: self.cap,
            }),
        }
    }

    fn compute(&mut self, e: &Arc<Expr>) -> Result<WeightedRelation, DenoteError> {
        match &**e {
            Expr::Var(v) => {
                let n = v.web_size();
                self.check_cap(&[n, n])?;
                let mut entries = vec![0.0; n * n];
                for i in 0..n {
                    entries[i * n + i] = 1.0;
                }
                Ok(WeightedRelation::new(vec![v.clone()], v.ty().clone(), entries))
            }
            Expr::MatApp(m, args) => {
                let rows = sorted_union(args.iter());
                let cols = m.cols();
                let radices = radices_of(&rows);
                let n_rows = self.check_cap(&[radices_of(&rows), vec![cols]].concat())? / cols.max(1);
                let arg_radices: Vec<usize> = args.iter().map(|a| a.web_size()).collect();
                let pos: Vec<usize> = args.iter().map(|a| position(&rows, a.name())).collect();
                let w = projection(rows.len(), &arg_radices, &pos);
                let mut od = Odometer::new(radices, vec![w]);
                let mut entries = Vec::with_capacity(n_rows * cols);
                while od.advance() {
                    let mrow = od.idx[0];
                    entries.extend((0..cols).map(|c| m.get(mrow, c)));
                }
                Ok(WeightedRelation::new(rows, m.out().clone(), entries))
            }
            Expr::ArrowApp(f, args) => {
                let Type::Arrow(_, result) = f.ty() else {
                    return Err(AstError::ApplicationMismatch {
                        head: f.name().to_string(),
                        expected: "an arrow type".into(),
                        found: f.ty().to_string(),
                    }
                    .into());
                };
                let t = result.web_size().expect("web size overflow");
                let avars = args.vars();
                let rows = sorted_union(std::iter::once(f).chain(avars.iter().copied()));
                let radices = radices_of(&rows);
                let size = self.check_cap(&[radices.clone(), vec![t]].concat())?;
                let arg_radices: Vec<usize> = avars.iter().map(|a| a.web_size()).collect();
                let pos: Vec<usize> = avars.iter().map(|a| position(&rows, a.name())).collect();
                let wx = projection(rows.len(), &arg_radices, &pos);
                let wf = projection(rows.len(), &[f.web_size()], &[position(&rows, f.name())]);
                let mut od = Odometer::new(radices, vec![wf, wx]);
                let mut entries = vec![0.0; size];
                let mut row = 0;
                while od.advance() {
                    let (d, x) = (od.idx[0], od.idx[1]);
                    if d / t == x {
                        entries[row * t + d % t] = 1.0;
                    }
                    row += 1;
                }
                Ok(WeightedRelation::new(rows, (**result).clone(), entries))
            }
            Expr::Pair(a, b) => {
                let ra = self.denote(a)?;
                let rb = self.denote(b)?;
                let rows = sorted_union(ra.rows().iter().chain(rb.rows()));
                let (ca, cb) = (ra.n_cols(), rb.n_cols());
                let radices = radices_of(&rows);
                let size = self.check_cap(&[radices.clone(), vec![ca, cb]].concat())?;
                let wa = sub_projection(&rows, ra.rows(), &BTreeMap::new());
                let wb = sub_projection(&rows, rb.rows(), &BTreeMap::new());
                let mut od = Odometer::new(radices, vec![wa, wb]);
                let mut entries = vec![0.0; size];
                let mut row = 0;
                let mut ops = 0u64;
                while od.advance() {
                    let out = &mut entries[row * ca * cb..(row + 1) * ca * cb];
                    let (xa, xb) = (ra.row(od.idx[0]), rb.row(od.idx[1]));
                    for (i, va) in xa.iter().enumerate() {
                        if *va == 0.0 {
                            continue;
                        }
                        for (j, vb) in xb.iter().enumerate() {
                            out[i * cb + j] = va * vb;
                        }
                        ops += cb as u64;
                    }
                    row += 1;
                }
                self.ops += ops;
                let ty = Type::tensor(ra.ty().clone(), rb.ty().clone());
                Ok(WeightedRelation::new(rows, ty, entries))
            }
            Expr::Lam(p, body) => {
                let rb = self.denote(body)?;
                let pvars = p.vars();
                let rows: Vec<Variable> = rb
                    .rows()
                    .iter()
                    .filter(|v| !p.contains(v.name()))
                    .cloned()
                    .collect();
                let pr: Vec<usize> = pvars.iter().map(|v| v.web_size()).collect();
                let psize: usize = pr.iter().product();
                let t = rb.n_cols();
                let universe: Vec<usize> = [radices_of(&rows), pr.clone()].concat();
                let size = self.check_cap(&[universe.clone(), vec![t]].concat())?;
                let n = rows.len();
                let pos: Vec<usize> = (n..n + pvars.len()).collect();
                let wp = projection(universe.len(), &pr, &pos);
                let bound: BTreeMap<&str, usize> =
                    pvars.iter().enumerate().map(|(i, v)| (v.name(), n + i)).collect();
                let we = sub_projection_ext(&rows, universe.len(), rb.rows(), &bound);
                let mut od = Odometer::new(universe, vec![wp, we]);
                let mut entries = vec![0.0; size];
                let mut k = 0;
                while od.advance() {
                    let row = k / psize;
                    let b1 = od.idx[0];
                    let src = rb.row(od.idx[1]);
                    let base = row * psize * t + b1 * t;
                    entries[base..base + t].copy_from_slice(src);
                    k += 1;
                }
                let ty = Type::arrow(p.ty(), rb.ty().clone());
                Ok(WeightedRelation::new(rows, ty, entries))
            }
            Expr::Let(p, bound, body) => {
                let r1 = self.denote(bound)?;
                let r2 = self.denote(body)?;
                let pvars = p.vars();
                let rows = sorted_union(
                    r1.rows()
                        .iter()
                        .chain(r2.rows().iter().filter(|v| !p.contains(v.name()))),
                );
                let pr: Vec<usize> = pvars.iter().map(|v| v.web_size()).collect();
                let psize: usize = pr.iter().product();
                let t = r2.n_cols();
                let n = rows.len();
                let universe: Vec<usize> = [radices_of(&rows), pr.clone()].concat();
                self.check_loop(&[universe.clone(), vec![t]].concat())?;
                let size = self.check_cap(&[radices_of(&rows), vec![t]].concat())?;
                let pos: Vec<usize> = (n..n + pvars.len()).collect();
                let wc = projection(universe.len(), &pr, &pos);
                let w1 = sub_projection_ext(&rows, universe.len(), r1.rows(), &BTreeMap::new());
                let shadow: BTreeMap<&str, usize> =
                    pvars.iter().enumerate().map(|(i, v)| (v.name(), n + i)).collect();
                let w2 = sub_projection_ext(&rows, universe.len(), r2.rows(), &shadow);
                let mut od = Odometer::new(universe, vec![wc, w1, w2]);
                let mut entries = vec![0.0; size];
                let mut k = 0;
                let mut ops = 0u64;
                while od.advance() {
                    let row = k / psize;
                    k += 1;
                    let w = r1.get(od.idx[1], od.idx[0]);
                    if w == 0.0 {
                        continue;
                    }
                    let src = r2.row(od.idx[2]);
                    let out = &mut entries[row * t..(row + 1) * t];
                    for (o, s) in out.iter_mut().zip(src) {
                        *o += w * s;
                    }
                    ops += t as u64;
                }
                self.ops += ops;
                Ok(WeightedRelation::new(rows, r2.ty().clone(), entries))
            }
        }
    }
}

fn sorted_union<'a>(vars: impl Iterator<Item = &'a Variable>) -> Vec<Variable> {
    let m: BTreeMap<&str, &Variable> = vars.map(|v| (v.name(), v)).collect();
    m.into_values().cloned().collect()
}

fn radices_of(vars: &[Variable]) -> Vec<usize> {
    vars.iter().map(|v| v.web_size()).collect()
}

fn position(rows: &[Variable], name: &str) -> usize {
    rows.iter()
        .position(|v| v.name() == name)
        .expect("variable missing from row set")
}

fn sub_projection(rows: &[Variable], sub: &[Variable], bound: &BTreeMap<&str, usize>) -> Vec<usize> {
    sub_projection_ext(rows, rows.len(), sub, bound)
}

/// Weights onto the row index of `sub`, reading each variable from `bound`
/// if it is there and from `rows` otherwise.
fn sub_projection_ext(
    rows: &[Variable],
    universe_len: usize,
    sub: &[Variable],
    bound: &BTreeMap<&str, usize>,
) -> Vec<usize> {
    let pos: Vec<usize> = sub
        .iter()
        .map(|v| bound.get(v.name()).copied().unwrap_or_else(|| position(rows, v.name())))
        .collect();
    projection(universe_len, &radices_of(sub), &pos)
}

/// Denotation of a single expression with a fresh cache.
pub fn denote(e: &Arc<Expr>) -> Result<WeightedRelation, DenoteError> {
    Ok((*Denoter::default().denote(e)?).clone())
}

pub fn denote_term(term: &LetTerm) -> Result<WeightedRelation, DenoteError> {
    denote(&term.to_expr())
}

/// Result of comparing a closed expression's total mass with `ht` of its
/// type.
#[derive(Clone, Debug, PartialEq)]
pub struct MassReport {
    pub mass: f64,
    pub expected: u64,
    pub ok: bool,
}

pub fn total_mass_check(e: &Arc<Expr>) -> Result<MassReport, DenoteError> {
    let fv = e.free_vars();
    if !fv.is_empty() {
        let names: Vec<&str> = fv.iter().map(|v| v.name()).collect();
        return Err(DenoteError::NotClosed {
            vars: names.join(", "),
        });
    }
    let r = denote(e)?;
    let expected = r.ty().ht().expect("height overflow");
    let mass = r.total_mass();
    Ok(MassReport {
        mass,
        expected,
        ok: (mass - expected as f64).abs() <= TOL,
    })
}

/// Row index of a relation for an assignment given by name.
pub fn row_index(rel: &WeightedRelation, a: &Assignment) -> Option<usize> {
    let st = rel.row_strides();
    rel.rows()
        .iter()
        .zip(st)
        .try_fold(0, |acc, (v, s)| Some(acc + a.get(v.name())?.index(v.ty())? * s))
}

/// Pattern of variables read as a web element index of its type.
pub fn pattern_index(p: &Pattern, a: &Assignment) -> Option<usize> {
    let vars = p.vars();
    let radices: Vec<usize> = vars.iter().map(|v| v.web_size()).collect();
    let st = web::strides(&radices);
    vars.iter()
        .zip(st)
        .try_fold(0, |acc, (v, s)| Some(acc + a.get(v.name())?.index(v.ty())? * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::StochasticMatrix;

    fn coin(p: f64) -> Arc<StochasticMatrix> {
        Arc::new(StochasticMatrix::new("Coin", vec![], Type::Bool, vec![p, 1.0 - p]).unwrap())
    }

    fn bx(n: &str) -> Variable {
        Variable::bool(n)
    }

    #[test]
    fn coin_copy_is_diagonal() {
        let c = Expr::mat_app(coin(0.3), vec![]);
        let e = Expr::let_in(
            Pattern::Var(bx("v")),
            c,
            Expr::let_in(
                Pattern::Var(bx("w")),
                Expr::var(bx("v")),
                Expr::pair(Expr::var(bx("v")), Expr::var(bx("w"))),
            ),
        );
        let r = denote(&e).unwrap();
        let want = [0.3, 0.0, 0.0, 0.7];
        for (a, b) in r.entries().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_of_coins_is_product() {
        let c = Expr::mat_app(coin(0.3), vec![]);
        let r = denote(&Expr::pair(c.clone(), c)).unwrap();
        let want = [0.09, 0.21, 0.21, 0.49];
        for (a, b) in r.entries().iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn variable_is_identity() {
        let r = denote(&Expr::var(bx("x"))).unwrap();
        assert_eq!(r.entries(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn arrow_application_is_double_delta() {
        let f = Variable::new("f", Type::arrow(Type::Bool, Type::Bool));
        let r = denote(&Expr::arrow_app(f, Pattern::Var(bx("x")))).unwrap();
        // rows (f, x): f ranges over (in,out) pairs; entry 1 iff in = x and column = out
        assert_eq!(r.n_rows(), 8);
        for row in 0..8 {
            let (fd, x) = (row / 2, row % 2);
            for col in 0..2 {
                let want = if fd / 2 == x && fd % 2 == col { 1.0 } else { 0.0 };
                assert_eq!(r.get(row, col), want, "row {row} col {col}");
            }
        }
    }

    #[test]
    fn lambda_curries() {
        let m = Arc::new(
            StochasticMatrix::new("M", vec![Type::Bool], Type::Bool, vec![0.1, 0.9, 0.6, 0.4]).unwrap(),
        );
        let lam = Expr::lam(Pattern::Var(bx("y")), Expr::mat_app(m, vec![bx("y")]));
        let r = denote(&lam).unwrap();
        assert_eq!(r.entries(), &[0.1, 0.9, 0.6, 0.4]);
        let mass = total_mass_check(&lam).unwrap();
        assert_eq!(mass.expected, 2);
        assert!(mass.ok);
    }

    #[test]
    fn let_shadowing_reads_inner_binding() {
        // let x = C in let x = M(x) in x  ==  C then M
        let m = Arc::new(
            StochasticMatrix::new("M", vec![Type::Bool], Type::Bool, vec![0.1, 0.9, 0.6, 0.4]).unwrap(),
        );
        let e = Expr::let_in(
            Pattern::Var(bx("x")),
            Expr::mat_app(coin(0.3), vec![]),
            Expr::let_in(Pattern::Var(bx("x")), Expr::mat_app(m, vec![bx("x")]), Expr::var(bx("x"))),
        );
        let r = denote(&e).unwrap();
        assert!((r.entries()[0] - (0.3 * 0.1 + 0.7 * 0.6)).abs() < 1e-12);
    }

    #[test]
    fn not_closed() {
        assert!(matches!(
            total_mass_check(&Expr::var(bx("x"))),
            Err(DenoteError::NotClosed { .. })
        ));
    }

    #[test]
    fn cap_is_enforced() {
        let mut d = Denoter::new(3);
        assert!(matches!(
            d.denote(&Expr::var(bx("x"))),
            Err(DenoteError::WebCapExceeded { .. })
        ));
    }
}
