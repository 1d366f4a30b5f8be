//! Graph Isomorphism Network encoder: forward pass, hand-written
//! reverse-mode gradients, Adam training with dual checkpointing, and
//! embedding export.
//!
//! Each layer updates node states as `MLP((1 + eps) * h_v + sum of neighbor
//! states)`; a sum or mean readout over the final layer yields the graph
//! embedding, and a linear softmax head provides the supervised baseline.

mod adam;
mod backward;
mod checkpoint;
mod embed;
mod forward;
mod gradcheck;
mod model;
mod train;

pub use adam::Adam;
pub use backward::{loss_and_grads, Grads};
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use embed::{
    embed_dataset, export_embeddings, read_embeddings_jsonl, write_embeddings_jsonl,
    EmbeddingRecord, EmbeddingSet,
};
pub use forward::{gin_forward, predict_class, softmax_head};
pub use gradcheck::gradient_check;
pub use model::{Dense, GinLayer, GinModel};
pub use train::{
    evaluate_accuracy, train, train_with_hook, BestCheckpoint, CheckpointKind, EpochHook,
    EpochHookCtx, EpochRecord, TrainState,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the per-layer epsilon is trained or held at a constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonMode {
    Learnable,
    Fixed(f64),
}

/// Graph-level readout over final-layer node embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Sum,
    Mean,
}

/// MLP activation. `Identity` exists for ablations and hand-checkable tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

/// Encoder and trainer hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GinConfig {
    /// Number of GIN layers (L).
    pub num_layers: usize,
    /// Embedding dimension (d_h).
    pub hidden_dim: usize,
    /// Dense layers per per-GIN-layer MLP.
    pub mlp_depth: usize,
    /// Dropout probability on MLP hidden activations (p_d).
    pub dropout: f64,
    pub epsilon_mode: EpsilonMode,
    pub pooling: Pooling,
    pub activation: Activation,
    /// Adam learning rate (eta).
    pub learning_rate: f64,
    /// Mini-batch size (B).
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for GinConfig {
    fn default() -> Self {
        GinConfig {
            num_layers: 5,
            hidden_dim: 128,
            mlp_depth: 2,
            dropout: 0.5,
            epsilon_mode: EpsilonMode::Learnable,
            pooling: Pooling::Sum,
            activation: Activation::Relu,
            learning_rate: 1e-3,
            batch_size: 128,
            epochs: 100,
            seed: 0,
        }
    }
}

impl GinConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_layers < 1 {
            return Err(Error::InvalidInput("num_layers must be >= 1".into()));
        }
        if self.hidden_dim < 1 {
            return Err(Error::InvalidInput("hidden_dim must be >= 1".into()));
        }
        if self.mlp_depth < 1 {
            return Err(Error::InvalidInput("mlp_depth must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::InvalidInput(format!(
                "dropout must lie in [0, 1), got {}",
                self.dropout
            )));
        }
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidInput("learning_rate must be positive".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::InvalidInput("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}
