//! Model parameters and initialization.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gin::{Activation, EpsilonMode, GinConfig, Pooling};

/// A fully-connected layer computing `x W^T + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out_dim x in_dim`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    fn init(in_dim: usize, out_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let weight = Array2::from_shape_fn((out_dim, in_dim), |_| rng.gen_range(-bound..bound));
        Dense {
            weight,
            bias: Array1::zeros(out_dim),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.nrows()
    }

    /// `x` is `n x in_dim`; returns `n x out_dim`.
    pub fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight.t()) + &self.bias
    }
}

/// One GIN layer: a learnable epsilon and the update MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct GinLayer {
    pub mlp: Vec<Dense>,
    pub epsilon: f64,
}

/// All learnable parameters of the encoder plus the softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct GinModel {
    pub layers: Vec<GinLayer>,
    /// Linear head, `num_classes x hidden_dim`.
    pub head: Dense,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub num_classes: usize,
    pub epsilon_trainable: bool,
    pub pooling: Pooling,
    pub activation: Activation,
    /// Dropout probability used by the training-mode forward pass.
    pub dropout: f64,
}

impl GinModel {
    /// Initialize a model for the given input feature dimension and class
    /// count. Parameter draw order is fixed, so equal seeds give equal models.
    pub fn init(
        config: &GinConfig,
        input_dim: usize,
        num_classes: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        if input_dim == 0 {
            return Err(Error::InvalidInput("input feature dimension is 0; assign node features first".into()));
        }
        if num_classes < 2 {
            return Err(Error::InvalidInput("need at least 2 classes".into()));
        }
        let epsilon = match config.epsilon_mode {
            EpsilonMode::Learnable => 0.0,
            EpsilonMode::Fixed(v) => v,
        };
        let mut layers = Vec::with_capacity(config.num_layers);
        for k in 0..config.num_layers {
            let mut mlp = Vec::with_capacity(config.mlp_depth);
            let mut in_dim = if k == 0 { input_dim } else { config.hidden_dim };
            for _ in 0..config.mlp_depth {
                mlp.push(Dense::init(in_dim, config.hidden_dim, rng));
                in_dim = config.hidden_dim;
            }
            layers.push(GinLayer { mlp, epsilon });
        }
        let head = Dense::init(config.hidden_dim, num_classes, rng);
        Ok(GinModel {
            layers,
            head,
            input_dim,
            hidden_dim: config.hidden_dim,
            num_classes,
            epsilon_trainable: matches!(config.epsilon_mode, EpsilonMode::Learnable),
            pooling: config.pooling,
            activation: config.activation,
            dropout: config.dropout,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Verify the dimension chain and parameter finiteness.
    pub fn validate(&self) -> Result<()> {
        let mut expect = self.input_dim;
        for (k, layer) in self.layers.iter().enumerate() {
            for (i, dense) in layer.mlp.iter().enumerate() {
                if dense.in_dim() != expect {
                    return Err(Error::Shape(format!(
                        "layer {k} mlp {i}: expected input dim {expect}, found {}",
                        dense.in_dim()
                    )));
                }
                expect = dense.out_dim();
            }
            if !layer.epsilon.is_finite() {
                return Err(Error::Numeric(format!("layer {k} epsilon is not finite")));
            }
        }
        if expect != self.hidden_dim {
            return Err(Error::Shape(format!(
                "final layer output dim {expect} != hidden dim {}",
                self.hidden_dim
            )));
        }
        if self.head.in_dim() != self.hidden_dim || self.head.out_dim() != self.num_classes {
            return Err(Error::Shape("head dimensions do not match".into()));
        }
        let finite = self
            .layers
            .iter()
            .flat_map(|l| l.mlp.iter())
            .chain(std::iter::once(&self.head))
            .all(|d| d.weight.iter().all(|x| x.is_finite()) && d.bias.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::Numeric("model contains non-finite parameters".into()));
        }
        Ok(())
    }

    /// Total number of scalar parameters, epsilons included.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.mlp.iter().map(|d| d.weight.len() + d.bias.len()).sum::<usize>() + 1)
            .sum::<usize>()
            + self.head.weight.len()
            + self.head.bias.len()
    }

    /// Flatten all parameters in a fixed order: per layer the MLP weights
    /// (row-major) and biases, then epsilon; finally the head.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            for dense in &layer.mlp {
                out.extend(dense.weight.iter());
                out.extend(dense.bias.iter());
            }
            out.push(layer.epsilon);
        }
        out.extend(self.head.weight.iter());
        out.extend(self.head.bias.iter());
        out
    }

    /// Inverse of [`params_flat`](Self::params_flat).
    pub fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "parameter count mismatch");
        let mut pos = 0usize;
        for layer in &mut self.layers {
            for dense in &mut layer.mlp {
                for w in dense.weight.iter_mut() {
                    *w = flat[pos];
                    pos += 1;
                }
                for b in dense.bias.iter_mut() {
                    *b = flat[pos];
                    pos += 1;
                }
            }
            layer.epsilon = flat[pos];
            pos += 1;
        }
        for w in self.head.weight.iter_mut() {
            *w = flat[pos];
            pos += 1;
        }
        for b in self.head.bias.iter_mut() {
            *b = flat[pos];
            pos += 1;
        }
    }

    /// Named parameter blocks in flattening order, for checkpoint files.
    pub fn param_blocks(&self) -> Vec<(String, Vec<usize>)> {
        let mut blocks = Vec::new();
        for (k, layer) in self.layers.iter().enumerate() {
            for (i, dense) in layer.mlp.iter().enumerate() {
                blocks.push((
                    format!("layer{k}.mlp{i}.weight"),
                    vec![dense.out_dim(), dense.in_dim()],
                ));
                blocks.push((format!("layer{k}.mlp{i}.bias"), vec![dense.out_dim()]));
            }
            blocks.push((format!("layer{k}.epsilon"), vec![]));
        }
        blocks.push(("head.weight".into(), vec![self.num_classes, self.hidden_dim]));
        blocks.push(("head.bias".into(), vec![self.num_classes]));
        blocks
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn tiny_model() -> GinModel {
        let config = GinConfig {
            num_layers: 2,
            hidden_dim: 4,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        GinModel::init(&config, 3, 2, &mut rng).unwrap()
    }

    #[test]
    fn params_roundtrip() {
        let mut m = tiny_model();
        let flat = m.params_flat();
        assert_eq!(flat.len(), m.param_count());
        let mut changed = flat.clone();
        changed[0] += 1.0;
        m.set_params_flat(&changed);
        assert_eq!(m.params_flat(), changed);
    }

    #[test]
    fn init_is_seed_deterministic() {
        let config = GinConfig::default();
        let mut r1 = ChaCha8Rng::seed_from_u64(42);
        let mut r2 = ChaCha8Rng::seed_from_u64(42);
        let a = GinModel::init(&config, 5, 2, &mut r1).unwrap();
        let b = GinModel::init(&config, 5, 2, &mut r2).unwrap();
        assert_eq!(a.params_flat(), b.params_flat());
    }

    #[test]
    fn shape_chain_is_validated() {
        let mut m = tiny_model();
        m.hidden_dim = 7;
        assert!(m.validate().is_err());
    }
}
