use std::fmt;
use std::sync::Arc;

/// Types of the calculus.
///
/// Positive types are built from `Bool` and `Tensor`; arrows take a positive
/// input. `Tensor` covers both `P * Q` and `P * T` (left side always
/// positive), so a mixed tensor whose right side happens to be positive is
/// already in normal form and structural equality is syntactic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    Bool,
    Tensor(Box<Type>, Box<Type>),
    Arrow(Box<Type>, Box<Type>),
}

impl Type {
    pub fn tensor(left: Type, right: Type) -> Type {
        Type::Tensor(Box::new(left), Box::new(right))
    }

    pub fn arrow(input: Type, result: Type) -> Type {
        Type::Arrow(Box::new(input), Box::new(result))
    }

    /// Right-nested tensor of a non-empty list of types.
    pub fn tensor_of(types: &[Type]) -> Option<Type> {
        let (last, init) = types.split_last()?;
        Some(
            init.iter()
                .rev()
                .fold(last.clone(), |acc, t| Type::tensor(t.clone(), acc)),
        )
    }

    /// No arrow anywhere in the type.
    pub fn is_positive(&self) -> bool {
        match self {
            Type::Bool => true,
            Type::Tensor(l, r) => l.is_positive() && r.is_positive(),
            Type::Arrow(..) => false,
        }
    }

    pub fn is_arrow(&self) -> bool {
        matches!(self, Type::Arrow(..))
    }

    /// Checks the grammar: tensor left operands and arrow inputs are positive.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Type::Bool => true,
            Type::Tensor(l, r) => l.is_positive() && r.is_well_formed(),
            Type::Arrow(p, t) => p.is_positive() && t.is_well_formed(),
        }
    }

    /// Variables may only carry positive or arrow types.
    pub fn is_variable_type(&self) -> bool {
        self.is_well_formed() && (self.is_positive() || self.is_arrow())
    }

    /// Cardinality of the web. `None` on overflow.
    pub fn web_size(&self) -> Option<usize> {
        match self {
            Type::Bool => Some(2),
            Type::Tensor(l, r) | Type::Arrow(l, r) => l.web_size()?.checked_mul(r.web_size()?),
        }
    }

    /// `dim(P)`, defined on positive types only.
    pub fn dim(&self) -> Option<u64> {
        match self {
            Type::Bool => Some(2),
            Type::Tensor(l, r) => l.dim()?.checked_mul(r.dim()?),
            Type::Arrow(..) => None,
        }
    }

    /// `ht(T)`: expected total mass of a closed expression of this type.
    pub fn ht(&self) -> Option<u64> {
        if self.is_positive() {
            return Some(1);
        }
        match self {
            Type::Arrow(p, t) => p.dim()?.checked_mul(t.ht()?),
            Type::Tensor(_, t) => t.ht(),
            Type::Bool => Some(1),
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Bool => write!(f, "Bool"),
            Type::Tensor(l, r) => {
                match **l {
                    Type::Bool => write!(f, "{l}")?,
                    _ => write!(f, "({l})")?,
                }
                write!(f, " * ")?;
                match **r {
                    Type::Arrow(..) => write!(f, "({r})"),
                    _ => write!(f, "{r}"),
                }
            }
            Type::Arrow(p, t) => match **p {
                Type::Arrow(..) => write!(f, "({p}) -o {t}"),
                _ => write!(f, "{p} -o {t}"),
            },
        }
    }
}

/// A Church-typed variable: the type travels with every occurrence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable {
    name: Arc<str>,
    ty: Type,
}

impl Variable {
    pub fn new(name: impl AsRef<str>, ty: Type) -> Self {
        Variable {
            name: Arc::from(name.as_ref()),
            ty,
        }
    }

    pub fn bool(name: impl AsRef<str>) -> Self {
        Self::new(name, Type::Bool)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ty(&self) -> &Type {
        &self.ty
    }

    pub fn is_positive(&self) -> bool {
        self.ty.is_positive()
    }

    pub fn is_arrow(&self) -> bool {
        self.ty.is_arrow()
    }

    /// Same type, different name.
    pub fn renamed(&self, name: impl AsRef<str>) -> Self {
        Variable::new(name, self.ty.clone())
    }

    pub fn web_size(&self) -> usize {
        self.ty.web_size().unwrap_or(usize::MAX)
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Binding patterns: a variable or a pair of patterns.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    Var(Variable),
    Pair(Box<Pattern>, Box<Pattern>),
}

impl Pattern {
    pub fn pair(left: Pattern, right: Pattern) -> Pattern {
        Pattern::Pair(Box::new(left), Box::new(right))
    }

    /// Right-nested pattern over the given variables; `None` when empty.
    pub fn from_vars<I>(vars: I) -> Option<Pattern>
    where
        I: IntoIterator<Item = Variable>,
        I::IntoIter: DoubleEndedIterator,
    {
        let mut it = vars.into_iter().rev();
        let last = Pattern::Var(it.next()?);
        Some(it.fold(last, |acc, v| Pattern::pair(Pattern::Var(v), acc)))
    }

    /// Leaves in left-to-right order.
    pub fn vars(&self) -> Vec<&Variable> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a Variable>) {
        match self {
            Pattern::Var(v) => out.push(v),
            Pattern::Pair(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Pattern::Var(_) => 1,
            Pattern::Pair(l, r) => l.len() + r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, name: &str) -> bool {
        match self {
            Pattern::Var(v) => v.name() == name,
            Pattern::Pair(l, r) => l.contains(name) || r.contains(name),
        }
    }

    /// Tensor type read off the leaves.
    pub fn ty(&self) -> Type {
        match self {
            Pattern::Var(v) => v.ty().clone(),
            Pattern::Pair(l, r) => Type::tensor(l.ty(), r.ty()),
        }
    }

    pub fn is_positive(&self) -> bool {
        self.vars().iter().all(|v| v.is_positive())
    }

    /// The arrow variable of the pattern, if any.
    pub fn arrow_var(&self) -> Option<&Variable> {
        self.vars().into_iter().find(|v| v.is_arrow())
    }

    /// Drops the leaf named `name`; `None` if nothing is left.
    pub fn remove(&self, name: &str) -> Option<Pattern> {
        match self {
            Pattern::Var(v) if v.name() == name => None,
            Pattern::Var(_) => Some(self.clone()),
            Pattern::Pair(l, r) => match (l.remove(name), r.remove(name)) {
                (Some(l), Some(r)) => Some(Pattern::pair(l, r)),
                (Some(p), None) | (None, Some(p)) => Some(p),
                (None, None) => None,
            },
        }
    }

    /// The positive part of the pattern (arrow variable removed).
    pub fn positive_part(&self) -> Option<Pattern> {
        match self.arrow_var() {
            Some(f) => self.remove(f.name()),
            None => Some(self.clone()),
        }
    }

    /// Splits into the arrow variable and the positive remainder.
    pub fn split(&self) -> (Option<Variable>, Option<Pattern>) {
        (self.arrow_var().cloned(), self.positive_part())
    }

    /// Inverse of [`Pattern::split`] for patterns whose arrow sits at the top
    /// right: `<p, f>`.
    pub fn rebuild(arrow: Option<Variable>, positive: Option<Pattern>) -> Option<Pattern> {
        match (positive, arrow) {
            (Some(p), Some(f)) => Some(Pattern::pair(p, Pattern::Var(f))),
            (Some(p), None) => Some(p),
            (None, Some(f)) => Some(Pattern::Var(f)),
            (None, None) => None,
        }
    }

    /// Renames leaves through `map`; unmapped names are kept.
    pub fn rename(&self, map: &dyn Fn(&Variable) -> Option<Variable>) -> Pattern {
        match self {
            Pattern::Var(v) => Pattern::Var(map(v).unwrap_or_else(|| v.clone())),
            Pattern::Pair(l, r) => Pattern::pair(l.rename(map), r.rename(map)),
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) => write!(f, "{v}"),
            Pattern::Pair(l, r) => write!(f, "({l}, {r})"),
        }
    }
}
