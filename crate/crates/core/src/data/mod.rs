//! Graph datasets: parsing, degree features, stratified splits.

mod features;
mod split;
pub mod synthetic;
pub mod tu;

pub use features::{assign_degree_features, FeatureMode};
pub use split::{stratified_split, SplitRatios};
pub use tu::{parse_tu_dataset, write_tu_dataset};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which partition a graph belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Split::Train => write!(f, "train"),
            Split::Val => write!(f, "val"),
            Split::Test => write!(f, "test"),
        }
    }
}

/// A single undirected graph with per-node features and a class label.
///
/// Edges are stored once per undirected pair with `u < v`, no self-loops.
/// Node indices are 0-based and local to the graph.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub id: usize,
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize)>,
    /// Row-major `num_nodes x feature_dim` feature matrix (flat).
    pub node_features: Vec<f64>,
    pub feature_dim: usize,
    pub label: usize,
}

impl Graph {
    pub fn new(id: usize, num_nodes: usize, edges: Vec<(usize, usize)>, label: usize) -> Self {
        Graph {
            id,
            num_nodes,
            edges,
            node_features: Vec::new(),
            feature_dim: 0,
            label,
        }
    }

    /// Degree of every node.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.num_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    /// Feature row of node `v`.
    pub fn feature_row(&self, v: usize) -> &[f64] {
        let d = self.feature_dim;
        &self.node_features[v * d..(v + 1) * d]
    }

    /// Drops self-loops, normalizes endpoints to `u < v` and deduplicates.
    /// Returns an error if an endpoint is out of range.
    pub(crate) fn normalize_edges(&mut self) -> Result<()> {
        let n = self.num_nodes;
        for &(u, v) in &self.edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u},{v}) out of range for graph {} with {n} nodes",
                    self.id
                )));
            }
        }
        let mut set: Vec<(usize, usize)> = self
            .edges
            .iter()
            .filter(|(u, v)| u != v)
            .map(|&(u, v)| if u < v { (u, v) } else { (v, u) })
            .collect();
        set.sort_unstable();
        set.dedup();
        self.edges = set;
        Ok(())
    }
}

/// An ordered collection of graphs with consistent labels and features.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    pub graphs: Vec<Graph>,
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Per-graph split tag, aligned with `graphs`.
    pub split: Vec<Split>,
}

impl GraphDataset {
    pub fn new(graphs: Vec<Graph>, num_classes: usize) -> Self {
        let n = graphs.len();
        let feature_dim = graphs.first().map(|g| g.feature_dim).unwrap_or(0);
        GraphDataset {
            graphs,
            num_classes,
            feature_dim,
            split: vec![Split::Train; n],
        }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Indices of graphs carrying the given split tag.
    pub fn split_indices(&self, split: Split) -> Vec<usize> {
        self.split
            .iter()
            .enumerate()
            .filter_map(|(i, &s)| (s == split).then_some(i))
            .collect()
    }

    /// Histogram of class labels.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.num_classes];
        for g in &self.graphs {
            hist[g.label] += 1;
        }
        hist
    }

    /// Maximum node degree over the entire dataset.
    pub fn max_degree(&self) -> usize {
        self.graphs
            .iter()
            .flat_map(|g| g.degrees())
            .max()
            .unwrap_or(0)
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            num_graphs: self.len(),
            num_classes: self.num_classes,
            class_histogram: self.class_histogram(),
            total_nodes: self.graphs.iter().map(|g| g.num_nodes).sum(),
            total_edges: self.graphs.iter().map(|g| g.edges.len()).sum(),
            max_degree: self.max_degree(),
            feature_dim: self.feature_dim,
        }
    }
}

/// JSON-serializable dataset statistics for the `info` command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub num_graphs: usize,
    pub num_classes: usize,
    pub class_histogram: Vec<usize>,
    pub total_nodes: usize,
    pub total_edges: usize,
    pub max_degree: usize,
    pub feature_dim: usize,
}
