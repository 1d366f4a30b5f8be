//! Synthetic structurally-separable datasets for tests and smoke runs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Graph, GraphDataset};

/// Parameters for [`cycles_and_stars`]. Node counts are drawn uniformly from
/// `min_nodes..=max_nodes` per graph.
#[derive(Debug, Clone, Copy)]
pub struct CyclesAndStars {
    pub per_class: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub seed: u64,
}

impl Default for CyclesAndStars {
    fn default() -> Self {
        CyclesAndStars {
            per_class: 100,
            min_nodes: 6,
            max_nodes: 16,
            seed: 0,
        }
    }
}

/// Generate a two-class dataset: class 0 are cycle graphs, class 1 are star
/// graphs. Node features are left unset; follow with
/// [`assign_degree_features`](crate::data::assign_degree_features).
pub fn cycles_and_stars(spec: CyclesAndStars) -> GraphDataset {
    assert!(spec.min_nodes >= 3, "cycles need at least 3 nodes");
    assert!(spec.max_nodes >= spec.min_nodes);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut graphs = Vec::with_capacity(2 * spec.per_class);
    for i in 0..spec.per_class {
        let n = rng.gen_range(spec.min_nodes..=spec.max_nodes);
        graphs.push(Graph::new(i, n, cycle_edges(n), 0));
    }
    for i in 0..spec.per_class {
        let n = rng.gen_range(spec.min_nodes..=spec.max_nodes);
        graphs.push(Graph::new(spec.per_class + i, n, star_edges(n), 1));
    }
    GraphDataset::new(graphs, 2)
}

/// Edges of the cycle graph C_n.
pub fn cycle_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

/// Edges of the star graph on `n` nodes: node 0 is the hub.
pub fn star_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (0, i)).collect()
}

/// A uniformly random simple graph, useful for property tests.
pub fn random_graph(id: usize, num_nodes: usize, edge_prob: f64, rng: &mut ChaCha8Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..num_nodes {
        for v in (u + 1)..num_nodes {
            if rng.gen::<f64>() < edge_prob {
                edges.push((u, v));
            }
        }
    }
    Graph::new(id, num_nodes, edges, 0)
}
