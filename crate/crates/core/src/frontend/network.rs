use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::parser::SourceProgram;
use super::FrontendError;
use crate::ast::{Definition, Expr, LetTerm, Pattern, StochasticMatrix, Type, Variable};

/// Bayesian network in JSON: boolean variables, one node per variable with
/// its parents and CPT, and a query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub variables: Vec<NetworkVariable>,
    pub nodes: Vec<NetworkNode>,
    pub query: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkVariable {
    pub name: String,
    /// Reserved; only 2 is supported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub var: String,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt: Cpt,
}

/// CPT rows enumerate the parent web in canonical order (`true` first,
/// first parent most significant); columns are `(true, false)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cpt {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

impl Cpt {
    pub fn flat(&self) -> Vec<f64> {
        match self {
            Cpt::Flat(v) => v.clone(),
            Cpt::Nested(rows) => rows.iter().flatten().copied().collect(),
        }
    }

    fn shape_ok(&self, rows: usize) -> bool {
        match self {
            Cpt::Flat(v) => v.len() == rows * 2,
            Cpt::Nested(r) => r.len() == rows && r.iter().all(|row| row.len() == 2),
        }
    }
}

impl NetworkFile {
    pub fn from_json(text: &str) -> Result<Self, FrontendError> {
        serde_json::from_str(text).map_err(|e| FrontendError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("network serializes")
    }

    /// Node indices in topological order. Among ready nodes the one listed
    /// first in the file goes first, so a file already in topological order
    /// keeps its order.
    pub fn topological_order(&self) -> Result<Vec<usize>, FrontendError> {
        let index: BTreeMap<&str, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.var.as_str(), i))
            .collect();
        let mut indegree = vec![0usize; self.nodes.len()];
        let mut children = vec![Vec::new(); self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            for p in &n.parents {
                let j = *index.get(p.as_str()).ok_or_else(|| FrontendError::UnknownNetworkVariable {
                    name: p.clone(),
                })?;
                indegree[i] += 1;
                children[j].push(i);
            }
        }
        let mut ready: BTreeSet<usize> = (0..self.nodes.len()).filter(|i| indegree[*i] == 0).collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &c in &children[i] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    ready.insert(c);
                }
            }
        }
        if order.len() < self.nodes.len() {
            let stuck: Vec<&str> = (0..self.nodes.len())
                .filter(|i| indegree[*i] > 0)
                .map(|i| self.nodes[i].var.as_str())
                .collect();
            return Err(FrontendError::CyclicNetwork {
                nodes: stuck.join(", "),
            });
        }
        Ok(order)
    }

    fn validate(&self) -> Result<(), FrontendError> {
        let mut declared = BTreeSet::new();
        for v in &self.variables {
            if let Some(s) = v.states {
                if s != 2 {
                    return Err(FrontendError::UnsupportedStates {
                        name: v.name.clone(),
                        states: s,
                    });
                }
            }
            if !declared.insert(v.name.as_str()) {
                return Err(FrontendError::DuplicateNetworkEntry { name: v.name.clone() });
            }
        }
        let mut seen = BTreeSet::new();
        for n in &self.nodes {
            if !declared.contains(n.var.as_str()) {
                return Err(FrontendError::UnknownNetworkVariable { name: n.var.clone() });
            }
            if !seen.insert(n.var.as_str()) {
                return Err(FrontendError::DuplicateNetworkEntry { name: n.var.clone() });
            }
            let mut ps = BTreeSet::new();
            for p in &n.parents {
                if !declared.contains(p.as_str()) {
                    return Err(FrontendError::UnknownNetworkVariable { name: p.clone() });
                }
                if !ps.insert(p.as_str()) || *p == n.var {
                    return Err(FrontendError::DuplicateNetworkEntry { name: p.clone() });
                }
            }
            let rows = 1usize << n.parents.len();
            if !n.cpt.shape_ok(rows) {
                return Err(FrontendError::CptShapeMismatch {
                    node: n.var.clone(),
                    expected_rows: rows,
                });
            }
        }
        if let Some(missing) = declared.iter().find(|v| !seen.contains(*v)) {
            return Err(FrontendError::MissingNode {
                name: missing.to_string(),
            });
        }
        if self.query.is_empty() {
            return Err(FrontendError::EmptyQuery);
        }
        let mut q = BTreeSet::new();
        for v in &self.query {
            if !declared.contains(v.as_str()) {
                return Err(FrontendError::UnknownQueryVariable { name: v.clone() });
            }
            if !q.insert(v.as_str()) {
                return Err(FrontendError::DuplicateNetworkEntry { name: v.clone() });
            }
        }
        Ok(())
    }
}

/// One definition `x = M_x(parents)` per node in topological order, output
/// the right-nested query.
pub fn ingest_network(file: &NetworkFile) -> Result<SourceProgram, FrontendError> {
    file.validate()?;
    let order = file.topological_order()?;
    let mut matrices = BTreeMap::new();
    let mut defs = Vec::with_capacity(order.len());
    for i in order {
        let n = &file.nodes[i];
        let name = format!("M_{}", n.var);
        let m = StochasticMatrix::new(
            name.clone(),
            vec![Type::Bool; n.parents.len()],
            Type::Bool,
            n.cpt.flat(),
        )
        .map_err(|source| FrontendError::Matrix {
            line: 0,
            col: 0,
            source,
        })?;
        let m = Arc::new(m);
        matrices.insert(name, m.clone());
        let args = n.parents.iter().map(Variable::bool).collect();
        defs.push(Definition::new(
            Pattern::Var(Variable::bool(&n.var)),
            Expr::mat_app(m, args),
        ));
    }
    let output = Pattern::from_vars(file.query.iter().map(Variable::bool)).expect("query is non-empty");
    Ok(SourceProgram {
        matrices,
        var_types: BTreeMap::new(),
        term: LetTerm::new(defs, output),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(var: &str, parents: &[&str], cpt: Vec<f64>) -> NetworkNode {
        NetworkNode {
            var: var.into(),
            parents: parents.iter().map(|s| s.to_string()).collect(),
            cpt: Cpt::Flat(cpt),
        }
    }

    fn vars(names: &[&str]) -> Vec<NetworkVariable> {
        names
            .iter()
            .map(|n| NetworkVariable {
                name: n.to_string(),
                states: None,
            })
            .collect()
    }

    #[test]
    fn single_root() {
        let f = NetworkFile {
            variables: vars(&["x"]),
            nodes: vec![node("x", &[], vec![0.2, 0.8])],
            query: vec!["x".into()],
        };
        let p = ingest_network(&f).unwrap();
        assert_eq!(p.term.to_string(), "x = M_x();\nin x");
    }

    #[test]
    fn reorders_topologically() {
        let f = NetworkFile {
            variables: vars(&["a", "b"]),
            nodes: vec![node("b", &["a"], vec![0.5; 4]), node("a", &[], vec![0.5; 2])],
            query: vec!["b".into()],
        };
        let p = ingest_network(&f).unwrap();
        let names: Vec<_> = p.term.defined_vars().iter().map(|v| v.name().to_string()).collect();
        assert_eq!(names, ["a", "b"]);
    }

    #[test]
    fn errors() {
        let cyc = NetworkFile {
            variables: vars(&["a", "b"]),
            nodes: vec![node("a", &["b"], vec![0.5; 4]), node("b", &["a"], vec![0.5; 4])],
            query: vec!["a".into()],
        };
        assert!(matches!(ingest_network(&cyc), Err(FrontendError::CyclicNetwork { .. })));
        let shape = NetworkFile {
            variables: vars(&["a"]),
            nodes: vec![node("a", &[], vec![0.5; 4])],
            query: vec!["a".into()],
        };
        assert!(matches!(ingest_network(&shape), Err(FrontendError::CptShapeMismatch { .. })));
        let q = NetworkFile {
            variables: vars(&["a"]),
            nodes: vec![node("a", &[], vec![0.5; 2])],
            query: vec!["z".into()],
        };
        assert!(matches!(ingest_network(&q), Err(FrontendError::UnknownQueryVariable { .. })));
    }

    #[test]
    fn nested_cpt_json() {
        let text = r#"{"variables":[{"name":"a"},{"name":"b","states":2}],
            "nodes":[{"var":"a","cpt":[0.3,0.7]},{"var":"b","parents":["a"],"cpt":[[0.1,0.9],[0.6,0.4]]}],
            "query":["b"]}"#;
        let f = NetworkFile::from_json(text).unwrap();
        let p = ingest_network(&f).unwrap();
        assert_eq!(p.matrices["M_b"].entries(), &[0.1, 0.9, 0.6, 0.4]);
    }
}
