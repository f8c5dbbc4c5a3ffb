use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution};
use serde::{Deserialize, Serialize};

use crate::frontend::{Cpt, NetworkFile, NetworkNode, NetworkVariable};

/// Shape of a random network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// At least 1.
    pub nodes: usize,
    /// Clamped to `nodes - 1`.
    pub max_parents: usize,
    /// Chance that each earlier node beyond the first parent becomes a
    /// parent too.
    pub p_extra_edge: f64,
    /// Clamped to `1..=nodes`.
    pub query_size: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            nodes: 6,
            max_parents: 2,
            p_extra_edge: 0.3,
            query_size: 2,
        }
    }
}

impl GeneratorConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        GeneratorConfig { seed, ..self.clone() }
    }
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// A random boolean network `x1..xn`, listed in topological order.
///
/// Every node after the first gets one parent drawn uniformly from the
/// earlier nodes, plus each other earlier node with probability
/// `p_extra_edge`, keeping at most `max_parents`. CPT rows come from a
/// symmetric Dirichlet(1, 1), rounded to 6 decimals with the second entry
/// set to the complement of the first. Query variables are drawn without
/// replacement, childless nodes weighing three times as much as the others,
/// and listed in node order.
pub fn random_network(cfg: &GeneratorConfig) -> NetworkFile {
    let n = cfg.nodes.max(1);
    let max_parents = cfg.max_parents.min(n - 1);
    let p_extra = cfg.p_extra_edge.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dirichlet = Dirichlet::new([1.0f64, 1.0]).expect("valid concentration");

    let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, ps) in parents.iter_mut().enumerate().skip(1) {
        if max_parents == 0 {
            break;
        }
        let first = rng.random_range(0..i);
        let mut chosen = vec![first];
        for j in 0..i {
            if j != first && rng.random_bool(p_extra) {
                chosen.push(j);
            }
        }
        while chosen.len() > max_parents {
            let k = rng.random_range(1..chosen.len());
            chosen.remove(k);
        }
        chosen.sort_unstable();
        *ps = chosen;
    }

    let mut nodes = Vec::with_capacity(n);
    for (i, ps) in parents.iter().enumerate() {
        let rows = 1usize << ps.len();
        let mut cpt = Vec::with_capacity(rows * 2);
        for _ in 0..rows {
            let [p, _] = dirichlet.sample(&mut rng);
            let p = round6(p).clamp(0.0, 1.0);
            cpt.push(p);
            cpt.push(round6(1.0 - p));
        }
        nodes.push(NetworkNode {
            var: names[i].clone(),
            parents: ps.iter().map(|j| names[*j].clone()).collect(),
            cpt: Cpt::Flat(cpt),
        });
    }

    let mut has_child = vec![false; n];
    for ps in &parents {
        for &j in ps {
            has_child[j] = true;
        }
    }
    let weights: Vec<f64> = has_child.iter().map(|c| if *c { 1.0 } else { 3.0 }).collect();
    let k = cfg.query_size.clamp(1, n);
    let mut picked: Vec<usize> = index::sample_weighted(&mut rng, n, |i| weights[i], k)
        .expect("positive weights")
        .into_vec();
    picked.sort_unstable();

    NetworkFile {
        variables: names
            .iter()
            .map(|name| NetworkVariable {
                name: name.clone(),
                states: None,
            })
            .collect(),
        nodes,
        query: picked.into_iter().map(|i| names[i].clone()).collect(),
    }
}
