//! Brute-force oracles, random network generation and the cross-checking
//! suite.

mod generate;
mod suite;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ast::{Expr, LetTerm, Pattern, StochasticMatrix, Variable};
use crate::denote::web::{decode, space_size, strides};
use crate::factor::{big_product, Cost, Factor, FactorError, NameSet};
use crate::frontend::NetworkFile;

pub use generate::{random_network, GeneratorConfig};
pub use suite::{
    run_instance, run_suite, CheckRecord, Execution, Status, SuiteConfig, SuiteReport, SuiteStats,
};

/// Largest number of joint assignments the brute-force oracles enumerate.
pub const BRUTE_FORCE_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("brute force over {size} assignments exceeds the cap of {cap}")]
    WebCapExceeded { size: usize, cap: usize },
    #[error("brute force needs definitions of the form `x = M(args)` or `x = y`: {reason}")]
    Unsupported { reason: String },
    #[error(transparent)]
    Factor(#[from] FactorError),
}

impl VerifyError {
    pub fn is_web_cap(&self) -> bool {
        match self {
            VerifyError::WebCapExceeded { .. } => true,
            VerifyError::Factor(e) => e.is_web_cap(),
            VerifyError::Unsupported { .. } => false,
        }
    }
}

fn digit_of(v: &Variable, assignment: &BTreeMap<&str, usize>) -> usize {
    assignment[v.name()]
}

enum Kind<'a> {
    Matrix(&'a StochasticMatrix, &'a [Variable]),
    /// `p = q` with `q` a tuple of variables.
    Copy(Pattern),
}

/// Joint distribution of the output of a closed positive let-term whose
/// definitions apply a matrix or copy variables, computed by summing the
/// product of matrix entries over every assignment of the defined
/// variables.
/// Entries follow the canonical order of the output web.
pub fn brute_force_joint(term: &LetTerm) -> Result<Vec<f64>, VerifyError> {
    let mut defs = Vec::with_capacity(term.defs.len());
    for d in &term.defs {
        let kind = match &*d.expr {
            Expr::MatApp(m, args) if d.pattern.is_positive() => Kind::Matrix(m, args),
            e => match e.as_pattern() {
                Some(p) if d.pattern.is_positive() && p.ty() == d.pattern.ty() => Kind::Copy(p),
                _ => {
                    return Err(VerifyError::Unsupported {
                        reason: format!("definition of {} is `{}`", d.pattern, d.expr),
                    })
                }
            },
        };
        defs.push((&d.pattern, kind));
    }
    let vars = term.defined_vars();
    if !term.free_vars().is_empty() {
        return Err(VerifyError::Unsupported {
            reason: "the term has free variables".into(),
        });
    }
    let radices: Vec<usize> = vars.iter().map(|v| v.web_size()).collect();
    let total = space_size(&radices).unwrap_or(usize::MAX);
    if total > BRUTE_FORCE_CAP {
        return Err(VerifyError::WebCapExceeded {
            size: total,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let out_vars = term.output.vars();
    let out_radices: Vec<usize> = out_vars.iter().map(|v| v.web_size()).collect();
    let mut joint = vec![0.0; space_size(&out_radices).expect("output web")];
    for a in 0..total {
        let digits = decode(a, &radices);
        let asg: BTreeMap<&str, usize> = vars.iter().map(|v| v.name()).zip(digits.iter().copied()).collect();
        let mut w = 1.0;
        for (pattern, kind) in &defs {
            let col = mixed_index(pattern.vars().into_iter().map(|v| (digit_of(v, &asg), v.web_size())));
            w *= match kind {
                Kind::Matrix(m, args) => {
                    let row = mixed_index(args.iter().map(|a| (digit_of(a, &asg), a.web_size())));
                    m.get(row, col)
                }
                Kind::Copy(p) => {
                    let src = mixed_index(p.vars().into_iter().map(|v| (digit_of(v, &asg), v.web_size())));
                    if src == col {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            if w == 0.0 {
                break;
            }
        }
        let k = mixed_index(out_vars.iter().map(|v| (digit_of(v, &asg), v.web_size())));
        joint[k] += w;
    }
    Ok(joint)
}

fn mixed_index(digits: impl Iterator<Item = (usize, usize)>) -> usize {
    digits.fold(0, |acc, (d, r)| acc * r + d)
}

/// Joint distribution of the query of a network, straight from its CPTs
/// without building a let-term. Entries follow the canonical order of the
/// right-nested query tuple.
pub fn network_joint(file: &NetworkFile) -> Result<Vec<f64>, VerifyError> {
    let n = file.variables.len();
    if n > 12 {
        return Err(VerifyError::WebCapExceeded {
            size: 1usize.checked_shl(n as u32).unwrap_or(usize::MAX),
            cap: BRUTE_FORCE_CAP,
        });
    }
    let index: BTreeMap<&str, usize> = file
        .variables
        .iter()
        .enumerate()
        .map(|(i, v)| (v.name.as_str(), i))
        .collect();
    let mut joint = vec![0.0; 1 << file.query.len()];
    for a in 0..(1usize << n) {
        // variable i is true (digit 0) when bit (n-1-i) of `a` is clear
        let digit = |name: &str| (a >> (n - 1 - index[name])) & 1;
        let mut w = 1.0;
        for node in &file.nodes {
            let cpt = node.cpt.flat();
            let row = node.parents.iter().fold(0, |acc, p| acc * 2 + digit(p));
            w *= cpt[row * 2 + digit(&node.var)];
        }
        let k = file.query.iter().fold(0, |acc, q| acc * 2 + digit(q));
        joint[k] += w;
    }
    Ok(joint)
}

/// Reads the distribution of `output` off a factor set: multiply all
/// factors, sum out everything else, and list the entries in the canonical
/// order of the output web.
pub fn marginal_from_factors(items: &[Factor], output: &Pattern) -> Result<Vec<f64>, VerifyError> {
    let mut cost = Cost::default();
    let prod = big_product(items, &mut cost)?;
    let out_vars = output.vars();
    let keep: NameSet = out_vars.iter().map(|v| v.name().to_string()).collect();
    let drop: NameSet = prod.names().difference(&keep).cloned().collect();
    let s = prod.sum_out(&drop, &mut cost)?;
    let radices: Vec<usize> = out_vars.iter().map(|v| v.web_size()).collect();
    let size = space_size(&radices).expect("output web");
    let st = strides(&radices);
    let mut out = Vec::with_capacity(size);
    for k in 0..size {
        let digits: BTreeMap<String, usize> = out_vars
            .iter()
            .zip(&st)
            .zip(&radices)
            .map(|((v, s), r)| (v.name().to_string(), (k / s) % r))
            .collect();
        // an output variable missing from every factor contributes a constant 1
        out.push(s.value_at(&digits).unwrap_or(0.0));
    }
    Ok(out)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denote::denote_term;
    use crate::frontend::parse;

    #[test]
    fn brute_force_copies() {
        let p = parse("matrix C : -> Bool = [0.3, 0.7];\nv = C();\nw = v;\nin (v, w)").unwrap();
        assert_eq!(brute_force_joint(&p.term).unwrap(), vec![0.3, 0.0, 0.0, 0.7]);
    }

    #[test]
    fn brute_force_rejects_lets() {
        let p = parse("matrix C : -> Bool = [0.3, 0.7];\nv = let u = C() in u;\nin v").unwrap();
        assert!(matches!(brute_force_joint(&p.term), Err(VerifyError::Unsupported { .. })));
    }

    #[test]
    fn brute_force_single_node() {
        let p = parse("matrix M : -> Bool = [0.2, 0.8];\nx = M();\nin x").unwrap();
        assert_eq!(brute_force_joint(&p.term).unwrap(), vec![0.2, 0.8]);
    }

    #[test]
    fn brute_force_matches_denote_on_chain() {
        let text = "matrix A : -> Bool = [0.3, 0.7];\nmatrix B : Bool -> Bool = [0.9, 0.1; 0.2, 0.8];\n\
                    a = A();\nb = B(a);\nc = B(b);\nin (a, c)";
        let p = parse(text).unwrap();
        let d = denote_term(&p.term).unwrap();
        assert!(max_abs_diff(&brute_force_joint(&p.term).unwrap(), d.entries()) < 1e-12);
    }
}
