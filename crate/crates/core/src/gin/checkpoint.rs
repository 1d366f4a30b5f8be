//! Versioned JSON checkpoints: config echo, flat parameter arrays with
//! shape metadata, epoch, validation metric, and seed. Values round-trip
//! exactly (shortest-roundtrip f64 encoding).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gin::{GinConfig, GinModel};

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ParamBlock {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    config: GinConfig,
    input_dim: usize,
    num_classes: usize,
    epoch: Option<usize>,
    val_metric: Option<f64>,
    seed: u64,
    params: Vec<ParamBlock>,
}

/// Metadata stored alongside the parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: GinConfig,
    pub epoch: Option<usize>,
    pub val_metric: Option<f64>,
    pub seed: u64,
}

pub fn save_checkpoint(
    model: &GinModel,
    config: &GinConfig,
    epoch: Option<usize>,
    val_metric: Option<f64>,
    path: &Path,
) -> Result<()> {
    let flat = model.params_flat();
    let mut params = Vec::new();
    let mut pos = 0usize;
    for (name, shape) in model.param_blocks() {
        let len: usize = shape.iter().product::<usize>().max(1);
        params.push(ParamBlock {
            name,
            shape,
            data: flat[pos..pos + len].to_vec(),
        });
        pos += len;
    }
    debug_assert_eq!(pos, flat.len());
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        config: config.clone(),
        input_dim: model.input_dim,
        num_classes: model.num_classes,
        epoch,
        val_metric,
        seed: config.seed,
        params,
    };
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(GinModel, CheckpointMeta)> {
    if !path.is_file() {
        return Err(Error::State(format!(
            "checkpoint not found: {}",
            path.display()
        )));
    }
    let text = fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&text)?;
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::State(format!(
            "unsupported checkpoint version {}",
            file.version
        )));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    let mut model = GinModel::init(&file.config, file.input_dim, file.num_classes, &mut rng)?;

    let expected = model.param_blocks();
    if expected.len() != file.params.len() {
        return Err(Error::State(format!(
            "checkpoint has {} parameter blocks, expected {}",
            file.params.len(),
            expected.len()
        )));
    }
    let mut flat = Vec::with_capacity(model.param_count());
    for ((name, shape), block) in expected.iter().zip(&file.params) {
        if *name != block.name || *shape != block.shape {
            return Err(Error::State(format!(
                "checkpoint block {:?} {:?} does not match expected {:?} {:?}",
                block.name, block.shape, name, shape
            )));
        }
        let len = shape.iter().product::<usize>().max(1);
        if block.data.len() != len {
            return Err(Error::State(format!(
                "checkpoint block {:?} has {} values, expected {}",
                block.name,
                block.data.len(),
                len
            )));
        }
        flat.extend_from_slice(&block.data);
    }
    model.set_params_flat(&flat);
    model.validate()?;
    Ok((
        model,
        CheckpointMeta {
            config: file.config,
            epoch: file.epoch,
            val_metric: file.val_metric,
            seed: file.seed,
        },
    ))
}

use rand::SeedableRng;
