//! Graph embedding export and the JSON-lines embedding file format.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{GraphDataset, Split};
use crate::error::{Error, Result};
use crate::gin::forward::gin_forward;
use crate::gin::train::{CheckpointKind, TrainState};
use crate::gin::GinModel;

/// Graph embeddings with their labels, source ids and split tags, rows
/// ordered by graph id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    /// `N x d` matrix, one row per graph.
    pub vectors: Array2<f64>,
    pub labels: Vec<usize>,
    pub graph_ids: Vec<usize>,
    pub splits: Vec<Split>,
}

impl EmbeddingSet {
    pub fn len(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// One line of the embedding file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub graph_id: usize,
    pub split: Split,
    pub label: usize,
    pub vector: Vec<f64>,
}

/// Deterministic forward pass (dropout off) over every graph using the
/// requested checkpoint.
pub fn export_embeddings(
    state: &TrainState,
    dataset: &GraphDataset,
    which: CheckpointKind,
) -> Result<EmbeddingSet> {
    let model = state.checkpoint(which)?;
    embed_dataset(model, dataset)
}

/// Forward every graph through the model; rows come back in graph-id order.
pub fn embed_dataset(model: &GinModel, dataset: &GraphDataset) -> Result<EmbeddingSet> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput("cannot embed an empty dataset".into()));
    }
    let rows: Vec<Vec<f64>> = dataset
        .graphs
        .par_iter()
        .map(|g| gin_forward(model, g).map(|(_, pooled)| pooled.to_vec()))
        .collect::<Result<_>>()?;

    let dim = model.hidden_dim;
    let mut vectors = Array2::zeros((rows.len(), dim));
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.sort_by_key(|&i| dataset.graphs[i].id);
    let mut labels = Vec::with_capacity(rows.len());
    let mut graph_ids = Vec::with_capacity(rows.len());
    let mut splits = Vec::with_capacity(rows.len());
    for (row, &i) in order.iter().enumerate() {
        vectors
            .row_mut(row)
            .assign(&ndarray::ArrayView1::from(rows[i].as_slice()));
        labels.push(dataset.graphs[i].label);
        graph_ids.push(dataset.graphs[i].id);
        splits.push(dataset.split[i]);
    }
    Ok(EmbeddingSet {
        vectors,
        labels,
        graph_ids,
        splits,
    })
}

/// Write one JSON record per line: `{graph_id, split, label, vector}`.
pub fn write_embeddings_jsonl(set: &EmbeddingSet, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut out = Vec::new();
    for i in 0..set.len() {
        let record = EmbeddingRecord {
            graph_id: set.graph_ids[i],
            split: set.splits[i],
            label: set.labels[i],
            vector: set.vectors.row(i).to_vec(),
        };
        serde_json::to_writer(&mut out, &record)?;
        out.push(b'\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_embeddings_jsonl(path: &Path) -> Result<EmbeddingSet> {
    if !path.is_file() {
        return Err(Error::State(format!(
            "embedding file not found: {}",
            path.display()
        )));
    }
    let reader = BufReader::new(fs::File::open(path)?);
    let mut records: Vec<EmbeddingRecord> = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line)?);
    }
    if records.is_empty() {
        return Err(Error::State(format!(
            "embedding file is empty: {}",
            path.display()
        )));
    }
    let dim = records[0].vector.len();
    if records.iter().any(|r| r.vector.len() != dim) {
        return Err(Error::Numeric("embedding rows have inconsistent dimensions".into()));
    }
    let mut vectors = Array2::zeros((records.len(), dim));
    for (i, r) in records.iter().enumerate() {
        vectors
            .row_mut(i)
            .assign(&ndarray::ArrayView1::from(r.vector.as_slice()));
    }
    Ok(EmbeddingSet {
        vectors,
        labels: records.iter().map(|r| r.label).collect(),
        graph_ids: records.iter().map(|r| r.graph_id).collect(),
        splits: records.iter().map(|r| r.split).collect(),
    })
}
