//! Forward pass over one or many graphs, with the activation trace needed
//! for reverse-mode gradients.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::Graph;
use crate::error::{Error, Result};
use crate::gin::{Activation, GinModel, Pooling};

/// Dropout behaviour of a forward pass.
pub(crate) enum DropoutMode<'a> {
    Disabled,
    /// Inverted-scaling dropout with the model's probability.
    Enabled(&'a mut ChaCha8Rng),
}

/// Per-dense-layer activations retained for the backward pass.
pub(crate) struct MlpStep {
    /// Pre-activation `x W^T + b`.
    pub pre: Array2<f64>,
    /// Post-activation (and post-dropout) output; `None` for the final
    /// dense layer, whose output feeds the next stage directly.
    pub post: Option<Array2<f64>>,
    /// Dropout mask including the 1/keep scaling, when active.
    pub mask: Option<Array2<f64>>,
}

pub(crate) struct LayerTrace {
    /// MLP input `(1 + eps) h + sum_neighbors h`.
    pub aggregated: Array2<f64>,
    pub steps: Vec<MlpStep>,
}

/// Stacked forward pass over a batch of graphs.
pub(crate) struct BatchTrace {
    /// Row offset of each graph in the stacked node matrices; length B+1.
    pub offsets: Vec<usize>,
    /// Node states per level: `states[0]` is the stacked input features,
    /// `states[k+1]` the output of layer k. Length L+1.
    pub states: Vec<Array2<f64>>,
    pub layers: Vec<LayerTrace>,
    /// Graph embeddings, `B x hidden_dim`.
    pub pooled: Array2<f64>,
}

pub(crate) fn forward_batch(
    model: &GinModel,
    graphs: &[&Graph],
    mut dropout: DropoutMode<'_>,
) -> Result<BatchTrace> {
    let mut offsets = Vec::with_capacity(graphs.len() + 1);
    let mut total = 0usize;
    offsets.push(0);
    for g in graphs {
        if g.feature_dim != model.input_dim {
            return Err(Error::Shape(format!(
                "layer 0: graph {} has feature dim {}, model expects {}",
                g.id, g.feature_dim, model.input_dim
            )));
        }
        total += g.num_nodes;
        offsets.push(total);
    }

    let mut input = Array2::zeros((total, model.input_dim));
    for (g, &off) in graphs.iter().zip(&offsets) {
        for v in 0..g.num_nodes {
            input
                .row_mut(off + v)
                .assign(&ArrayView1::from(g.feature_row(v)));
        }
    }

    let mut states = vec![input];
    let mut layers = Vec::with_capacity(model.num_layers());
    for layer in &model.layers {
        let h = states.last().unwrap();
        let mut aggregated = h * (1.0 + layer.epsilon);
        for (g, &off) in graphs.iter().zip(&offsets) {
            for &(u, v) in &g.edges {
                let hu = h.row(off + u).to_owned();
                let hv = h.row(off + v).to_owned();
                aggregated.row_mut(off + u).scaled_add(1.0, &hv);
                aggregated.row_mut(off + v).scaled_add(1.0, &hu);
            }
        }

        let mut steps = Vec::with_capacity(layer.mlp.len());
        let mut x = aggregated.clone();
        for (i, dense) in layer.mlp.iter().enumerate() {
            let pre = dense.forward(&x);
            let last = i + 1 == layer.mlp.len();
            if last {
                x = pre.clone();
                steps.push(MlpStep {
                    pre,
                    post: None,
                    mask: None,
                });
            } else {
                let mut post = match model.activation {
                    Activation::Relu => pre.mapv(|z| z.max(0.0)),
                    Activation::Identity => pre.clone(),
                };
                let mask = match dropout {
                    DropoutMode::Enabled(ref mut rng) if model.dropout > 0.0 => {
                        let keep = 1.0 - model.dropout;
                        let mask = Array2::from_shape_fn(post.raw_dim(), |_| {
                            if rng.gen::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        });
                        post *= &mask;
                        Some(mask)
                    }
                    _ => None,
                };
                x = post.clone();
                steps.push(MlpStep {
                    pre,
                    post: Some(post),
                    mask,
                });
            }
        }
        layers.push(LayerTrace { aggregated, steps });
        states.push(x);
    }

    let final_state = states.last().unwrap();
    let mut pooled = Array2::zeros((graphs.len(), model.hidden_dim));
    for (b, g) in graphs.iter().enumerate() {
        let slice = final_state.slice(s![offsets[b]..offsets[b + 1], ..]);
        let mut sum = slice.sum_axis(Axis(0));
        if model.pooling == Pooling::Mean && g.num_nodes > 0 {
            sum /= g.num_nodes as f64;
        }
        pooled.row_mut(b).assign(&sum);
    }

    Ok(BatchTrace {
        offsets,
        states,
        layers,
        pooled,
    })
}

/// Deterministic (dropout-free) forward pass over a single graph.
/// Returns the final-layer node embeddings and the pooled graph embedding.
pub fn gin_forward(model: &GinModel, graph: &Graph) -> Result<(Array2<f64>, Array1<f64>)> {
    let trace = forward_batch(model, &[graph], DropoutMode::Disabled)?;
    let nodes = trace.states.last().unwrap().clone();
    let pooled = trace.pooled.row(0).to_owned();
    Ok((nodes, pooled))
}

/// Class probabilities from the linear head, stabilized by max subtraction.
pub fn softmax_head(model: &GinModel, graph_embedding: &ArrayView1<f64>) -> Result<Array1<f64>> {
    if graph_embedding.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("graph embedding contains non-finite values".into()));
    }
    if graph_embedding.len() != model.head.in_dim() {
        return Err(Error::Shape(format!(
            "head expects dim {}, embedding has {}",
            model.head.in_dim(),
            graph_embedding.len()
        )));
    }
    let logits = model.head.weight.dot(graph_embedding) + &model.head.bias;
    Ok(stable_softmax(&logits))
}

/// Argmax class with ties resolved toward the smaller index.
pub fn predict_class(probs: &Array1<f64>) -> usize {
    let mut best = 0usize;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn stable_softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp = logits.mapv(|z| (z - max).exp());
    let sum = exp.sum();
    exp / sum
}

/// `log(sum(exp(logits)))` with max subtraction.
pub(crate) fn log_sum_exp(logits: &ArrayView1<f64>) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    max + logits.mapv(|z| (z - max).exp()).sum().ln()
}
