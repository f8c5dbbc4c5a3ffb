use std::collections::{BTreeMap, BTreeSet};

use super::FactorSet;
use crate::ast::LetTerm;

/// Names a let-term lets the elimination strategies remove, in definition
/// order.
pub fn eliminable_order_candidates(term: &LetTerm) -> Vec<String> {
    term.eliminable_vars().iter().map(|v| v.name().to_string()).collect()
}

/// Greedy min-degree elimination heuristic on the interaction graph of a
/// factor set (one clique per factor). Repeatedly picks the candidate with
/// the fewest neighbours, ties broken by name, and connects its
/// neighbours. Only `candidates` are ordered; the others stay in the graph.
pub fn min_degree_order(set: &FactorSet, candidates: &[String]) -> Vec<String> {
    let mut graph: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for f in &set.items {
        let ns = f.names();
        for v in &ns {
            let adj = graph.entry(v.clone()).or_default();
            adj.extend(ns.iter().filter(|w| *w != v).cloned());
        }
    }
    let mut left: BTreeSet<String> = candidates.iter().filter(|c| graph.contains_key(*c)).cloned().collect();
    let mut order = Vec::with_capacity(left.len());
    while let Some(v) = left
        .iter()
        .min_by_key(|v| (graph[*v].len(), (*v).clone()))
        .cloned()
    {
        left.remove(&v);
        let adj = graph.remove(&v).unwrap_or_default();
        for a in &adj {
            let e = graph.get_mut(a).expect("symmetric graph");
            e.remove(&v);
            e.extend(adj.iter().filter(|b| *b != a).cloned());
        }
        order.push(v);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::Variable;
    use crate::factor::Factor;

    #[test]
    fn chain_is_eliminated_from_the_ends() {
        let b = |n: &str| Variable::bool(n);
        let set = FactorSet::new(vec![
            Factor::constant(vec![b("a"), b("b")]),
            Factor::constant(vec![b("b"), b("c")]),
            Factor::constant(vec![b("c"), b("d")]),
        ]);
        let cands: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
        let order = min_degree_order(&set, &cands);
        assert_eq!(order, ["a", "b", "c", "d"]);
        assert_eq!(min_degree_order(&set, &["z".to_string()]), Vec::<String>::new());
    }
}
