//! Mini-batch Adam training with dual checkpointing: the best-validation
//! model and the last snapshot.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{GraphDataset, Split};
use crate::error::{Error, Result};
use crate::gin::adam::Adam;
use crate::gin::backward::loss_and_grads;
use crate::gin::forward::{gin_forward, predict_class, softmax_head};
use crate::gin::{GinConfig, GinModel};

/// Which stored model a consumer wants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointKind {
    Best,
    Last,
}

impl std::fmt::Display for CheckpointKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CheckpointKind::Best => write!(f, "best"),
            CheckpointKind::Last => write!(f, "last"),
        }
    }
}

/// Snapshot taken whenever validation accuracy strictly improves.
#[derive(Debug, Clone)]
pub struct BestCheckpoint {
    pub model: GinModel,
    pub epoch: usize,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_accuracy: f64,
}

/// Everything the trainer accumulates: the last model, the best-validation
/// checkpoint, the per-epoch history and the final RNG state.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub model: GinModel,
    pub best: Option<BestCheckpoint>,
    pub history: Vec<EpochRecord>,
    pub config: GinConfig,
    pub rng: ChaCha8Rng,
}

impl TrainState {
    /// Borrow the requested checkpoint's model.
    pub fn checkpoint(&self, kind: CheckpointKind) -> Result<&GinModel> {
        match kind {
            CheckpointKind::Last => Ok(&self.model),
            CheckpointKind::Best => self
                .best
                .as_ref()
                .map(|b| &b.model)
                .ok_or_else(|| Error::State("best checkpoint was never recorded".into())),
        }
    }
}

/// Context handed to the per-epoch hook.
pub struct EpochHookCtx<'a> {
    pub epoch: usize,
    pub model: &'a GinModel,
    pub record: EpochRecord,
}

pub type EpochHook<'a> = dyn FnMut(&EpochHookCtx<'_>) -> Result<()> + 'a;

/// Train on the dataset's train split, validating each epoch on the val
/// split. Equal configs (seed included) yield bitwise-identical results.
pub fn train(dataset: &GraphDataset, config: &GinConfig) -> Result<TrainState> {
    train_with_hook(dataset, config, &mut |_| Ok(()))
}

pub fn train_with_hook(
    dataset: &GraphDataset,
    config: &GinConfig,
    hook: &mut EpochHook<'_>,
) -> Result<TrainState> {
    config.validate()?;
    let train_idx = dataset.split_indices(Split::Train);
    let val_idx = dataset.split_indices(Split::Val);
    if train_idx.is_empty() || val_idx.is_empty() {
        return Err(Error::InvalidInput(
            "training requires nonempty train and val splits".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = GinModel::init(config, dataset.feature_dim, dataset.num_classes, &mut rng)?;
    let mut adam = Adam::new(config.learning_rate, model.param_count());
    let mut best: Option<BestCheckpoint> = None;
    let mut history = Vec::with_capacity(config.epochs);

    let mut order = train_idx.clone();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch_no, batch) in order.chunks(config.batch_size).enumerate() {
            let graphs: Vec<&_> = batch.iter().map(|&i| &dataset.graphs[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|&i| dataset.graphs[i].label).collect();
            let (loss, grads) = loss_and_grads(&model, &graphs, &labels, Some(&mut rng))?;
            if !loss.is_finite() {
                return Err(Error::Divergence {
                    epoch,
                    batch: batch_no,
                });
            }
            let mut params = model.params_flat();
            adam.step(&mut params, &grads.to_flat());
            model.set_params_flat(&params);
            epoch_loss += loss * batch.len() as f64;
        }
        let train_loss = epoch_loss / train_idx.len() as f64;
        let val_accuracy = evaluate_accuracy(&model, dataset, &val_idx)?;

        let improved = best
            .as_ref()
            .map(|b| val_accuracy > b.val_accuracy)
            .unwrap_or(true);
        if improved {
            best = Some(BestCheckpoint {
                model: model.clone(),
                epoch,
                val_accuracy,
            });
        }
        let record = EpochRecord {
            epoch,
            train_loss,
            val_accuracy,
        };
        history.push(record);
        hook(&EpochHookCtx {
            epoch,
            model: &model,
            record,
        })?;
    }

    Ok(TrainState {
        model,
        best,
        history,
        config: config.clone(),
        rng,
    })
}

/// Fraction of the given graphs whose head prediction matches the label.
pub fn evaluate_accuracy(model: &GinModel, dataset: &GraphDataset, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for &i in indices {
        let g = &dataset.graphs[i];
        let (_, pooled) = gin_forward(model, g)?;
        let probs = softmax_head(model, &pooled.view())?;
        if predict_class(&probs) == g.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / indices.len() as f64)
}
