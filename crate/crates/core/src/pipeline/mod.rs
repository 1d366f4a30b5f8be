//! End-to-end orchestration: train the encoder, export embeddings, run the
//! supervised head and the kernel-interpolation classifier at both
//! checkpoints, and emit comparison reports and explanations.
//!
//! Output directory layout (fixed so tests and tools can locate artifacts):
//!
//! ```text
//! out/
//!   config.json
//!   checkpoints/{best,last}.json
//!   embeddings/{best,last}.jsonl
//!   reports/training_curve.csv       per-epoch train loss / val accuracy
//!   reports/nnk_curve.csv            optional per-epoch comparison
//!   reports/report_{best,last}.json
//!   explanations/explain_<ckpt>_<id>.json
//! ```

mod eval;

pub use eval::{run_eval, run_explain, ClassifierReport, MetricsReport, NnkClassifierReport};

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::{
    assign_degree_features, parse_tu_dataset, stratified_split, DatasetSummary, FeatureMode,
    GraphDataset, SplitRatios,
};
use crate::error::Result;
use crate::gin::{save_checkpoint, train_with_hook, CheckpointKind, GinConfig, TrainState};
use crate::knn::MetricKind;
use crate::nnk::KernelSpec;

/// Which checkpoints an eval run covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointSelector {
    Best,
    Last,
    #[default]
    Both,
}

impl CheckpointSelector {
    pub fn kinds(self) -> Vec<CheckpointKind> {
        match self {
            CheckpointSelector::Best => vec![CheckpointKind::Best],
            CheckpointSelector::Last => vec![CheckpointKind::Last],
            CheckpointSelector::Both => vec![CheckpointKind::Best, CheckpointKind::Last],
        }
    }
}

/// Full pipeline configuration, echoed verbatim into every JSON artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub feature_mode: FeatureMode,
    pub split_ratios: SplitRatios,
    pub split_seed: u64,
    pub gin: GinConfig,
    pub kernel: KernelSpec,
    /// Neighbors retrieved per query.
    pub k_neighbors: usize,
    /// Coefficients at or below this threshold are zeroed post-solve.
    pub tau_edge: f64,
    /// KKT tolerance of the quadratic-program solver.
    pub solver_tolerance: f64,
    pub metric: MetricKind,
    pub checkpoint: CheckpointSelector,
    /// Evaluate both classifiers on the validation split every N epochs
    /// during training, logging a comparison curve.
    pub nnk_every: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_dir: PathBuf::new(),
            out_dir: PathBuf::new(),
            feature_mode: FeatureMode::OneHot,
            split_ratios: SplitRatios::default(),
            split_seed: 0,
            gin: GinConfig::default(),
            kernel: KernelSpec::default(),
            k_neighbors: 50,
            tau_edge: 1e-10,
            solver_tolerance: 1e-9,
            metric: MetricKind::Euclidean,
            checkpoint: CheckpointSelector::Both,
            nnk_every: None,
        }
    }
}

impl RunConfig {
    pub fn checkpoint_path(&self, kind: CheckpointKind) -> PathBuf {
        self.out_dir.join("checkpoints").join(format!("{kind}.json"))
    }

    pub fn embeddings_path(&self, kind: CheckpointKind) -> PathBuf {
        self.out_dir.join("embeddings").join(format!("{kind}.jsonl"))
    }

    pub fn report_path(&self, kind: CheckpointKind) -> PathBuf {
        self.out_dir.join("reports").join(format!("report_{kind}.json"))
    }

    pub fn explanation_path(&self, kind: CheckpointKind, graph_id: usize) -> PathBuf {
        self.out_dir
            .join("explanations")
            .join(format!("explain_{kind}_{graph_id}.json"))
    }

    pub fn training_curve_path(&self) -> PathBuf {
        self.out_dir.join("reports").join("training_curve.csv")
    }

    pub fn nnk_curve_path(&self) -> PathBuf {
        self.out_dir.join("reports").join("nnk_curve.csv")
    }
}

/// Parse, featurize and split the dataset named by the config.
pub fn load_dataset(config: &RunConfig) -> Result<GraphDataset> {
    let dataset = parse_tu_dataset(&config.data_dir)?;
    let dataset = assign_degree_features(dataset, config.feature_mode)?;
    stratified_split(dataset, config.split_ratios, config.split_seed)
}

/// Dataset statistics for the `info` command.
pub fn dataset_info(config: &RunConfig) -> Result<DatasetSummary> {
    Ok(load_dataset(config)?.summary())
}

/// Train, checkpoint, and log the training curve. Returns the train state
/// for in-process reuse.
pub fn run_train(config: &RunConfig) -> Result<TrainState> {
    let dataset = load_dataset(config)?;
    write_json(&config.out_dir.join("config.json"), config)?;

    let mut nnk_curve: Vec<String> = Vec::new();
    let state = {
        let dataset_ref = &dataset;
        let curve = &mut nnk_curve;
        let mut hook = move |ctx: &crate::gin::EpochHookCtx<'_>| -> Result<()> {
            if let Some(every) = config.nnk_every {
                if every > 0 && (ctx.epoch + 1) % every == 0 {
                    let row = eval::validation_comparison_row(config, dataset_ref, ctx)?;
                    curve.push(row);
                }
            }
            Ok(())
        };
        train_with_hook(&dataset, &config.gin, &mut hook)?
    };

    save_checkpoint(
        &state.model,
        &config.gin,
        state.history.last().map(|r| r.epoch),
        state.history.last().map(|r| r.val_accuracy),
        &config.checkpoint_path(CheckpointKind::Last),
    )?;
    if let Some(best) = &state.best {
        save_checkpoint(
            &best.model,
            &config.gin,
            Some(best.epoch),
            Some(best.val_accuracy),
            &config.checkpoint_path(CheckpointKind::Best),
        )?;
    }

    let mut curve = String::from("epoch,train_loss,val_accuracy\n");
    for r in &state.history {
        curve.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_accuracy));
    }
    write_text(&config.training_curve_path(), &curve)?;

    if config.nnk_every.is_some() {
        let mut text = String::from(
            "epoch,supervised_val_accuracy,supervised_val_macro_f1,nnk_val_accuracy,nnk_val_macro_f1\n",
        );
        for row in &nnk_curve {
            text.push_str(row);
            text.push('\n');
        }
        write_text(&config.nnk_curve_path(), &text)?;
    }

    Ok(state)
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}
