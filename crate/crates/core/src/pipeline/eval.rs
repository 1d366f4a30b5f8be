//! Evaluation of both classifiers on the test split, report assembly, and
//! on-demand explanations.

use std::time::Instant;

use ndarray::ArrayView1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{GraphDataset, Split};
use crate::error::{Error, Result};
use crate::gin::{
    embed_dataset, load_checkpoint, read_embeddings_jsonl, write_embeddings_jsonl, CheckpointKind,
    EmbeddingSet, EpochHookCtx, GinModel,
};
use crate::knn::{build_index, query, NeighborIndex};
use crate::metrics::{compute_metrics, MetricsFragment};
use crate::nnk::{build_problem, explain, solve_nnqp, Explanation, NnkSolverParams};
use crate::pipeline::{write_json, RunConfig};

/// Wall-clock timings of an eval run. Deliberately excluded from the
/// serialized report so identical configs produce byte-identical files;
/// shown on stdout instead.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalTimings {
    pub embed_seconds: f64,
    pub supervised_seconds: f64,
    pub nnk_seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub metrics: MetricsFragment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NnkClassifierReport {
    pub metrics: MetricsFragment,
    /// Mean active-set size over test queries (the paper's k-hat).
    pub mean_active_neighbors: f64,
    /// Queries that fell back to the nearest neighbor's label.
    pub fallback_count: usize,
}

/// Comparison of the supervised head and the kernel interpolator on the
/// identical test set of one checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub config: RunConfig,
    pub checkpoint: CheckpointKind,
    pub checkpoint_epoch: Option<usize>,
    pub checkpoint_val_metric: Option<f64>,
    /// SHA-256 of the embedding file both classifiers consumed.
    pub embedding_checksum: String,
    pub supervised: ClassifierReport,
    pub nnk: NnkClassifierReport,
    #[serde(skip)]
    pub timings: EvalTimings,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Head predictions for the given rows of an embedding set.
fn classify_supervised(
    model: &GinModel,
    embeddings: &EmbeddingSet,
    rows: &[usize],
) -> Result<Vec<usize>> {
    rows.iter()
        .map(|&i| {
            let probs = crate::gin::softmax_head(model, &embeddings.vectors.row(i))?;
            Ok(crate::gin::predict_class(&probs))
        })
        .collect()
}

struct NnkOutcome {
    explanations: Vec<Explanation>,
}

impl NnkOutcome {
    fn predictions(&self) -> Vec<usize> {
        self.explanations.iter().map(|e| e.predicted).collect()
    }

    fn mean_active(&self) -> f64 {
        let total: usize = self.explanations.iter().map(|e| e.neighbors.len()).sum();
        total as f64 / self.explanations.len() as f64
    }

    fn fallback_count(&self) -> usize {
        self.explanations.iter().filter(|e| e.fallback).count()
    }
}

/// Solve one query end to end; used by both eval and explain.
fn classify_one(
    config: &RunConfig,
    index: &NeighborIndex,
    query_id: usize,
    query_vec: &ArrayView1<f64>,
    num_classes: usize,
) -> Result<Explanation> {
    let neighbors = query(index, query_vec, config.k_neighbors)?;
    let problem = build_problem(&config.kernel, query_vec, &neighbors, index)?;
    let params = NnkSolverParams {
        tolerance: config.solver_tolerance,
        tau_edge: config.tau_edge,
    };
    let solution = solve_nnqp(&problem, &params)?;
    match explain(query_id, &solution, &problem, num_classes) {
        Ok(explanation) => Ok(explanation),
        Err(Error::EmptyActiveSet) => {
            // Degenerate neighborhood: fall back to the nearest neighbor.
            let label = problem.neighbor_labels[0];
            let mut probs = vec![0.0; num_classes];
            probs[label] = 1.0;
            Ok(Explanation {
                query_id,
                predicted: label,
                probs,
                neighbors: vec![],
                fallback: true,
            })
        }
        Err(e) => Err(e),
    }
}

fn classify_nnk(
    config: &RunConfig,
    embeddings: &EmbeddingSet,
    index: &NeighborIndex,
    rows: &[usize],
    num_classes: usize,
) -> Result<NnkOutcome> {
    let explanations: Vec<Explanation> = rows
        .par_iter()
        .map(|&i| {
            classify_one(
                config,
                index,
                embeddings.graph_ids[i],
                &embeddings.vectors.row(i),
                num_classes,
            )
        })
        .collect::<Result<_>>()?;
    Ok(NnkOutcome { explanations })
}

/// One explanation record per line.
fn write_explanations_jsonl(explanations: &[Explanation], path: &std::path::Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = Vec::new();
    for e in explanations {
        serde_json::to_writer(&mut out, e)?;
        out.push(b'\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn test_rows(embeddings: &EmbeddingSet) -> Vec<usize> {
    embeddings
        .splits
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| (s == Split::Test).then_some(i))
        .collect()
}

fn num_classes_of(embeddings: &EmbeddingSet) -> usize {
    embeddings.labels.iter().copied().max().unwrap_or(0) + 1
}

/// Evaluate both classifiers at one checkpoint and write the report.
pub fn run_eval(config: &RunConfig, kind: CheckpointKind) -> Result<MetricsReport> {
    let dataset = crate::pipeline::load_dataset(config)?;
    let (model, meta) = load_checkpoint(&config.checkpoint_path(kind))?;

    let embed_start = Instant::now();
    let embeddings = embed_dataset(&model, &dataset)?;
    let path = config.embeddings_path(kind);
    write_embeddings_jsonl(&embeddings, &path)?;
    let embed_seconds = embed_start.elapsed().as_secs_f64();

    // Each classifier independently reads the embedding file it consumes;
    // the report asserts both saw the same bytes.
    let supervised_start = Instant::now();
    let sup_bytes = std::fs::read(&path)?;
    let sup_checksum = sha256_hex(&sup_bytes);
    let sup_embeddings = read_embeddings_jsonl(&path)?;
    let rows = test_rows(&sup_embeddings);
    if rows.is_empty() {
        return Err(Error::InvalidInput("test split is empty".into()));
    }
    let num_classes = num_classes_of(&sup_embeddings).max(model.num_classes);
    let labels: Vec<usize> = rows.iter().map(|&i| sup_embeddings.labels[i]).collect();
    let sup_predictions = classify_supervised(&model, &sup_embeddings, &rows)?;
    let supervised = compute_metrics(&sup_predictions, &labels, num_classes)?;
    let supervised_seconds = supervised_start.elapsed().as_secs_f64();

    let nnk_start = Instant::now();
    let nnk_bytes = std::fs::read(&path)?;
    let nnk_checksum = sha256_hex(&nnk_bytes);
    if nnk_checksum != sup_checksum {
        return Err(Error::State(
            "classifiers read different embedding bytes".into(),
        ));
    }
    let nnk_embeddings = read_embeddings_jsonl(&path)?;
    let index = build_index(&nnk_embeddings, config.metric)?;
    let outcome = classify_nnk(config, &nnk_embeddings, &index, &rows, num_classes)?;
    let nnk_metrics = compute_metrics(&outcome.predictions(), &labels, num_classes)?;
    write_explanations_jsonl(
        &outcome.explanations,
        &config
            .out_dir
            .join("explanations")
            .join(format!("eval_{kind}.jsonl")),
    )?;
    let nnk_seconds = nnk_start.elapsed().as_secs_f64();

    let mean_active = outcome.mean_active();
    let report = MetricsReport {
        config: config.clone(),
        checkpoint: kind,
        checkpoint_epoch: meta.epoch,
        checkpoint_val_metric: meta.val_metric,
        embedding_checksum: sup_checksum,
        supervised: ClassifierReport {
            metrics: supervised,
        },
        nnk: NnkClassifierReport {
            metrics: nnk_metrics,
            mean_active_neighbors: mean_active,
            fallback_count: outcome.fallback_count(),
        },
        timings: EvalTimings {
            embed_seconds,
            supervised_seconds,
            nnk_seconds,
        },
    };
    write_json(&config.report_path(kind), &report)?;
    Ok(report)
}

/// Explanation file for one test graph, from previously written eval
/// artifacts.
pub fn run_explain(
    config: &RunConfig,
    kind: CheckpointKind,
    graph_id: usize,
) -> Result<Explanation> {
    let path = config.embeddings_path(kind);
    if !path.is_file() {
        return Err(Error::State(format!(
            "no embeddings at {}; run eval first",
            path.display()
        )));
    }
    let embeddings = read_embeddings_jsonl(&path)?;
    let row = embeddings
        .graph_ids
        .iter()
        .position(|&id| id == graph_id)
        .ok_or_else(|| Error::Lookup(format!("graph id {graph_id} not found")))?;
    if embeddings.splits[row] != Split::Test {
        return Err(Error::Lookup(format!(
            "graph {graph_id} is in the {} split; explanations cover test graphs",
            embeddings.splits[row]
        )));
    }
    let num_classes = num_classes_of(&embeddings);
    let index = build_index(&embeddings, config.metric)?;
    let query_vec = embeddings.vectors.row(row);
    let neighbors = query(&index, &query_vec, config.k_neighbors)?;
    let problem = build_problem(&config.kernel, &query_vec, &neighbors, &index)?;
    let params = NnkSolverParams {
        tolerance: config.solver_tolerance,
        tau_edge: config.tau_edge,
    };
    let solution = solve_nnqp(&problem, &params)?;
    let explanation = match explain(graph_id, &solution, &problem, num_classes) {
        Ok(e) => e,
        Err(Error::EmptyActiveSet) => {
            let label = problem.neighbor_labels[0];
            let mut probs = vec![0.0; num_classes];
            probs[label] = 1.0;
            Explanation {
                query_id: graph_id,
                predicted: label,
                probs,
                neighbors: vec![],
                fallback: true,
            }
        }
        Err(e) => return Err(e),
    };

    #[derive(Serialize)]
    struct ExplanationFile<'a> {
        config: &'a RunConfig,
        #[serde(flatten)]
        explanation: &'a Explanation,
    }
    write_json(
        &config.explanation_path(kind, graph_id),
        &ExplanationFile {
            config,
            explanation: &explanation,
        },
    )?;
    Ok(explanation)
}

/// One row of the optional per-epoch comparison curve: both classifiers
/// evaluated on the validation split.
pub(crate) fn validation_comparison_row(
    config: &RunConfig,
    dataset: &GraphDataset,
    ctx: &EpochHookCtx<'_>,
) -> Result<String> {
    let embeddings = embed_dataset(ctx.model, dataset)?;
    let rows: Vec<usize> = embeddings
        .splits
        .iter()
        .enumerate()
        .filter_map(|(i, &s)| (s == Split::Val).then_some(i))
        .collect();
    if rows.is_empty() {
        return Err(Error::InvalidInput("validation split is empty".into()));
    }
    let num_classes = dataset.num_classes;
    let labels: Vec<usize> = rows.iter().map(|&i| embeddings.labels[i]).collect();

    let sup_predictions = classify_supervised(ctx.model, &embeddings, &rows)?;
    let sup = compute_metrics(&sup_predictions, &labels, num_classes)?;
    let index = build_index(&embeddings, config.metric)?;
    let outcome = classify_nnk(config, &embeddings, &index, &rows, num_classes)?;
    let nnk = compute_metrics(&outcome.predictions(), &labels, num_classes)?;

    Ok(format!(
        "{},{},{},{},{}",
        ctx.epoch, sup.accuracy, sup.macro_f1, nnk.accuracy, nnk.macro_f1
    ))
}
