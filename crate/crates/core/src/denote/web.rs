use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::ast::{Type, Variable};

/// An element of the web of a type: a nested tuple of booleans, with arrow
/// elements read as (input, output) pairs.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(untagged)]
pub enum WebElement {
    B(bool),
    P(Box<WebElement>, Box<WebElement>),
}

impl WebElement {
    /// Element at position `idx` of the canonical enumeration of `ty`.
    pub fn from_index(ty: &Type, idx: usize) -> WebElement {
        match ty {
            Type::Bool => WebElement::B(idx == 0),
            Type::Tensor(l, r) | Type::Arrow(l, r) => {
                let rs = r.web_size().expect("web size overflow");
                WebElement::P(
                    Box::new(WebElement::from_index(l, idx / rs)),
                    Box::new(WebElement::from_index(r, idx % rs)),
                )
            }
        }
    }

    /// Position in the canonical enumeration; `None` on shape mismatch.
    pub fn index(&self, ty: &Type) -> Option<usize> {
        match (self, ty) {
            (WebElement::B(b), Type::Bool) => Some(if *b { 0 } else { 1 }),
            (WebElement::P(a, b), Type::Tensor(l, r) | Type::Arrow(l, r)) => {
                Some(a.index(l)? * r.web_size()? + b.index(r)?)
            }
            _ => None,
        }
    }
}

impl fmt::Display for WebElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WebElement::B(true) => write!(f, "t"),
            WebElement::B(false) => write!(f, "f"),
            WebElement::P(a, b) => write!(f, "({a},{b})"),
        }
    }
}

/// Assignment of web elements to variables, keyed by name.
pub type Assignment = BTreeMap<String, WebElement>;

/// The web of a type in canonical order: `true` before `false`, pairs
/// left-major.
pub fn enumerate_web(ty: &Type) -> Vec<WebElement> {
    let n = ty.web_size().expect("web size overflow");
    (0..n).map(|i| WebElement::from_index(ty, i)).collect()
}

/// The web of a variable set: variables sorted by name, then lexicographic.
/// The empty set yields the single empty assignment.
pub fn enumerate_assignments(vars: &[Variable]) -> Vec<Assignment> {
    let mut sorted: Vec<&Variable> = vars.iter().collect();
    sorted.sort();
    sorted.dedup_by(|a, b| a.name() == b.name());
    let radices: Vec<usize> = sorted.iter().map(|v| v.web_size()).collect();
    let total: usize = radices.iter().product();
    (0..total)
        .map(|i| {
            decode(i, &radices)
                .into_iter()
                .zip(&sorted)
                .map(|(d, v)| (v.name().to_string(), WebElement::from_index(v.ty(), d)))
                .collect()
        })
        .collect()
}

/// Mixed-radix digits of `idx`, most significant first.
pub fn decode(mut idx: usize, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (d, r) in digits.iter_mut().zip(radices).rev() {
        *d = idx % r;
        idx /= r;
    }
    digits
}

/// Positional weights of a mixed radix, most significant first.
pub fn strides(radices: &[usize]) -> Vec<usize> {
    let mut s = vec![1; radices.len()];
    for i in (0..radices.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * radices[i + 1];
    }
    s
}

/// Product of web sizes, `None` on overflow.
pub fn space_size(radices: &[usize]) -> Option<usize> {
    radices.iter().try_fold(1usize, |a, r| a.checked_mul(*r))
}

/// Walks a mixed-radix space in canonical order while tracking several
/// linear projections of the current digits. Each projection is given as one
/// weight per digit.
pub(crate) struct Odometer {
    radices: Vec<usize>,
    digits: Vec<usize>,
    weights: Vec<Vec<usize>>,
    pub idx: Vec<usize>,
    started: bool,
    empty: bool,
}

impl Odometer {
    pub fn new(radices: Vec<usize>, weights: Vec<Vec<usize>>) -> Self {
        debug_assert!(weights.iter().all(|w| w.len() == radices.len()));
        let empty = radices.contains(&0);
        Odometer {
            digits: vec![0; radices.len()],
            idx: vec![0; weights.len()],
            radices,
            weights,
            started: false,
            empty,
        }
    }

    /// Advances to the next point; the first call yields the origin.
    pub fn advance(&mut self) -> bool {
        if self.empty {
            return false;
        }
        if !self.started {
            self.started = true;
            return true;
        }
        for i in (0..self.radices.len()).rev() {
            if self.digits[i] + 1 < self.radices[i] {
                self.digits[i] += 1;
                for (k, w) in self.weights.iter().enumerate() {
                    self.idx[k] += w[i];
                }
                return true;
            }
            let back = self.digits[i];
            self.digits[i] = 0;
            for (k, w) in self.weights.iter().enumerate() {
                self.idx[k] -= back * w[i];
            }
        }
        false
    }
}

/// Weights mapping digits of `universe` onto the mixed-radix index of
/// `target`, where `target[j]` sits at position `pos[j]` of the universe.
pub(crate) fn projection(universe_len: usize, target_radices: &[usize], pos: &[usize]) -> Vec<usize> {
    let st = strides(target_radices);
    let mut w = vec![0; universe_len];
    for (j, p) in pos.iter().enumerate() {
        w[*p] += st[j];
    }
    w
}
