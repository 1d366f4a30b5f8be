//! Exact k-nearest-neighbor retrieval over training-split embeddings.
//!
//! Brute-force search is exact and, at the scale this pipeline targets
//! (thousands of graphs), fast enough that an approximate index would buy
//! nothing. Ties break toward the smaller row index so downstream solves
//! are reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::Split;
use crate::error::{Error, Result};
use crate::gin::EmbeddingSet;

/// Distance used for retrieval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    #[default]
    Euclidean,
    /// `1 - cosine similarity`; rejects zero-norm rows at build time.
    Cosine,
}

/// Immutable index over the training rows of an embedding set.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    vectors: Array2<f64>,
    labels: Vec<usize>,
    graph_ids: Vec<usize>,
    metric: MetricKind,
    /// Per-row L2 norms, populated for the cosine metric.
    norms: Option<Vec<f64>>,
}

/// Result of one query: row ids with their distances, sorted non-decreasing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborList {
    pub ids: Vec<usize>,
    pub distances: Vec<f64>,
}

impl NeighborList {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

impl NeighborIndex {
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn metric(&self) -> MetricKind {
        self.metric
    }

    /// Embedding row `i` of the index.
    pub fn vector(&self, i: usize) -> ArrayView1<'_, f64> {
        self.vectors.row(i)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn graph_id(&self, i: usize) -> usize {
        self.graph_ids[i]
    }
}

/// Build an index over the training-split rows of `embeddings`.
pub fn build_index(embeddings: &EmbeddingSet, metric: MetricKind) -> Result<NeighborIndex> {
    let train_rows: Vec<usize> = embeddings
        .splits
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| (s == Split::Train).then_some(i))
        .collect();
    if train_rows.is_empty() {
        return Err(Error::InvalidInput(
            "cannot build an index without training rows".into(),
        ));
    }
    let dim = embeddings.dim();
    let mut vectors = Array2::zeros((train_rows.len(), dim));
    let mut labels = Vec::with_capacity(train_rows.len());
    let mut graph_ids = Vec::with_capacity(train_rows.len());
    for (row, &i) in train_rows.iter().enumerate() {
        vectors.row_mut(row).assign(&embeddings.vectors.row(i));
        labels.push(embeddings.labels[i]);
        graph_ids.push(embeddings.graph_ids[i]);
    }
    let norms = match metric {
        MetricKind::Euclidean => None,
        MetricKind::Cosine => {
            let mut norms = Vec::with_capacity(vectors.nrows());
            for (row, v) in vectors.rows().into_iter().enumerate() {
                let norm = v.dot(&v).sqrt();
                if norm == 0.0 {
                    return Err(Error::Numeric(format!(
                        "row {row} (graph {}) has zero norm; cosine metric undefined",
                        graph_ids[row]
                    )));
                }
                norms.push(norm);
            }
            Some(norms)
        }
    };
    Ok(NeighborIndex {
        vectors,
        labels,
        graph_ids,
        metric,
        norms,
    })
}

/// Heap entry ordered by (distance, row index), largest first.
#[derive(PartialEq)]
struct Candidate {
    distance: f64,
    row: usize,
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance
            .total_cmp(&other.distance)
            .then(self.row.cmp(&other.row))
    }
}

/// Exact k smallest distances with ties broken by smaller row index.
/// Requests larger than the index return all rows.
pub fn query(index: &NeighborIndex, x: &ArrayView1<f64>, k: usize) -> Result<NeighborList> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    if x.len() != index.dim() {
        return Err(Error::Shape(format!(
            "query has dim {}, index has {}",
            x.len(),
            index.dim()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("query vector contains non-finite values".into()));
    }
    let k = k.min(index.len());

    let query_norm = match index.metric {
        MetricKind::Cosine => {
            let n = x.dot(x).sqrt();
            if n == 0.0 {
                return Err(Error::Numeric("zero query vector; cosine metric undefined".into()));
            }
            n
        }
        MetricKind::Euclidean => 0.0,
    };

    // Max-heap of the best k seen so far.
    let mut heap: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
    for (row, v) in index.vectors.rows().into_iter().enumerate() {
        let distance = match index.metric {
            MetricKind::Euclidean => {
                let mut acc = 0.0;
                for (a, b) in x.iter().zip(v.iter()) {
                    let d = a - b;
                    acc += d * d;
                }
                acc.sqrt()
            }
            MetricKind::Cosine => {
                let norms = index.norms.as_ref().expect("cosine index caches norms");
                1.0 - x.dot(&v) / (query_norm * norms[row])
            }
        };
        let candidate = Candidate { distance, row };
        if heap.len() < k {
            heap.push(candidate);
        } else if candidate < *heap.peek().unwrap() {
            heap.pop();
            heap.push(candidate);
        }
    }

    let mut best = heap.into_vec();
    best.sort_unstable_by(|a, b| a.cmp(b));
    Ok(NeighborList {
        ids: best.iter().map(|c| c.row).collect(),
        distances: best.iter().map(|c| c.distance).collect(),
    })
}
