//! Reverse-mode gradients of the mean cross-entropy loss through the head,
//! readout, and every GIN layer, including each epsilon.

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;

use crate::data::Graph;
use crate::error::{Error, Result};
use crate::gin::forward::{forward_batch, log_sum_exp, stable_softmax, DropoutMode};
use crate::gin::{Activation, GinModel, Pooling};

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone)]
pub struct LayerGrads {
    pub mlp: Vec<DenseGrads>,
    pub epsilon: f64,
}

/// Gradients mirroring [`GinModel`]'s parameter structure.
#[derive(Debug, Clone)]
pub struct Grads {
    pub layers: Vec<LayerGrads>,
    pub head: DenseGrads,
}

impl Grads {
    fn zeros(model: &GinModel) -> Self {
        Grads {
            layers: model
                .layers
                .iter()
                .map(|l| LayerGrads {
                    mlp: l
                        .mlp
                        .iter()
                        .map(|d| DenseGrads {
                            weight: Array2::zeros(d.weight.raw_dim()),
                            bias: Array1::zeros(d.bias.raw_dim()),
                        })
                        .collect(),
                    epsilon: 0.0,
                })
                .collect(),
            head: DenseGrads {
                weight: Array2::zeros(model.head.weight.raw_dim()),
                bias: Array1::zeros(model.head.bias.raw_dim()),
            },
        }
    }

    /// Flatten in the same order as [`GinModel::params_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
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
}

/// Mean cross-entropy over the batch and its gradients w.r.t. every
/// parameter. Pass an RNG to enable dropout (training mode).
pub fn loss_and_grads(
    model: &GinModel,
    graphs: &[&Graph],
    labels: &[usize],
    dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Grads)> {
    assert_eq!(graphs.len(), labels.len());
    if graphs.is_empty() {
        return Err(Error::InvalidInput("empty batch".into()));
    }
    let mode = match dropout_rng {
        Some(rng) => DropoutMode::Enabled(rng),
        None => DropoutMode::Disabled,
    };
    let trace = forward_batch(model, graphs, mode)?;
    let batch = graphs.len() as f64;

    // Head: logits = pooled W^T + b, loss = mean(logsumexp - logit_y).
    let logits = trace.pooled.dot(&model.head.weight.t()) + &model.head.bias;
    let mut loss = 0.0;
    let mut dlogits = Array2::zeros(logits.raw_dim());
    for (b, &y) in labels.iter().enumerate() {
        let row = logits.row(b);
        loss += log_sum_exp(&row) - row[y];
        let mut p = stable_softmax(&row.to_owned());
        p[y] -= 1.0;
        dlogits.row_mut(b).assign(&(&p / batch));
    }
    loss /= batch;

    let mut grads = Grads::zeros(model);
    grads.head.weight = dlogits.t().dot(&trace.pooled);
    grads.head.bias = dlogits.sum_axis(Axis(0));
    let dpooled = dlogits.dot(&model.head.weight);

    // Readout backward: scatter each graph's pooled gradient to its rows.
    let final_rows = trace.states.last().unwrap().nrows();
    let mut dstate = Array2::zeros((final_rows, model.hidden_dim));
    for (b, g) in graphs.iter().enumerate() {
        let scale = match model.pooling {
            Pooling::Sum => 1.0,
            Pooling::Mean => 1.0 / g.num_nodes.max(1) as f64,
        };
        let grad_row = &dpooled.row(b) * scale;
        for v in trace.offsets[b]..trace.offsets[b + 1] {
            dstate.row_mut(v).assign(&grad_row);
        }
    }

    // Walk the GIN layers in reverse.
    for k in (0..model.num_layers()).rev() {
        let layer = &model.layers[k];
        let layer_trace = &trace.layers[k];
        let depth = layer.mlp.len();

        // Through the MLP, last dense first.
        let mut dz = dstate;
        for i in (0..depth).rev() {
            let dense = &model.layers[k].mlp[i];
            // Input that fed this dense layer.
            let x = if i == 0 {
                &layer_trace.aggregated
            } else {
                layer_trace.steps[i - 1]
                    .post
                    .as_ref()
                    .expect("non-final step keeps its post-activation")
            };
            grads.layers[k].mlp[i].weight += &dz.t().dot(x);
            grads.layers[k].mlp[i].bias += &dz.sum_axis(Axis(0));
            let mut dx = dz.dot(&dense.weight);
            if i > 0 {
                let prev = &layer_trace.steps[i - 1];
                if let Some(mask) = &prev.mask {
                    dx *= mask;
                }
                if model.activation == Activation::Relu {
                    dx.zip_mut_with(&prev.pre, |d, &z| {
                        if z <= 0.0 {
                            *d = 0.0;
                        }
                    });
                }
            }
            dz = dx;
        }
        let dagg = dz;

        // Aggregation backward: agg = (1 + eps) h + A h with A symmetric.
        let h = &trace.states[k];
        grads.layers[k].epsilon = if model.epsilon_trainable {
            (&dagg * h).sum()
        } else {
            0.0
        };
        let mut dh = &dagg * (1.0 + layer.epsilon);
        for (b, g) in graphs.iter().enumerate() {
            let off = trace.offsets[b];
            for &(u, v) in &g.edges {
                let du = dagg.row(off + u).to_owned();
                let dv = dagg.row(off + v).to_owned();
                dh.row_mut(off + u).scaled_add(1.0, &dv);
                dh.row_mut(off + v).scaled_add(1.0, &du);
            }
        }
        // dstate now holds the gradient w.r.t. the previous level's node
        // states; at k = 0 that is the (unused) input-feature gradient.
        dstate = dh;
    }

    Ok((loss, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gin::{EpsilonMode, GinConfig};
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::SeedableRng;

    fn with_features(mut graph: Graph, rows: Vec<Vec<f64>>) -> Graph {
        graph.feature_dim = rows[0].len();
        graph.node_features = rows.into_iter().flatten().collect();
        graph
    }

    /// Single isolated node with identity MLPs: the epsilon gradient has the
    /// closed form dLoss/deps = dLoss/dh . h0.
    #[test]
    fn epsilon_gradient_matches_chain_rule_on_isolated_node() {
        let config = GinConfig {
            num_layers: 1,
            hidden_dim: 2,
            mlp_depth: 2,
            dropout: 0.0,
            epsilon_mode: EpsilonMode::Learnable,
            activation: Activation::Identity,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut model = GinModel::init(&config, 2, 2, &mut rng).unwrap();
        for layer in &mut model.layers {
            for dense in &mut layer.mlp {
                dense.weight = Array2::eye(2);
                dense.bias.fill(0.0);
            }
        }
        model.head.weight = array![[0.7, -0.3], [0.1, 0.9]];
        model.head.bias = array![0.05, -0.2];

        let h0 = array![1.3, -0.4];
        let g = with_features(Graph::new(0, 1, vec![], 0), vec![h0.to_vec()]);
        let label = 1usize;
        let (_, grads) = loss_and_grads(&model, &[&g], &[label], None).unwrap();

        // With eps = 0 the embedding equals h0; dLoss/dh = W^T (p - y).
        let logits = model.head.weight.dot(&h0) + &model.head.bias;
        let mut p = stable_softmax(&logits);
        p[label] -= 1.0;
        let dh = model.head.weight.t().dot(&p);
        let expected = dh.dot(&h0);
        assert_abs_diff_eq!(grads.layers[0].epsilon, expected, epsilon = 1e-12);
    }

    #[test]
    fn fixed_epsilon_receives_no_gradient() {
        let config = GinConfig {
            num_layers: 2,
            hidden_dim: 4,
            dropout: 0.0,
            epsilon_mode: EpsilonMode::Fixed(0.3),
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = GinModel::init(&config, 3, 2, &mut rng).unwrap();
        let g = with_features(
            Graph::new(0, 3, vec![(0, 1), (1, 2)], 0),
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        );
        let (_, grads) = loss_and_grads(&model, &[&g], &[0], None).unwrap();
        for layer in &grads.layers {
            assert_eq!(layer.epsilon, 0.0);
        }
    }

    #[test]
    fn dropout_changes_the_loss_only_in_training_mode() {
        let config = GinConfig {
            num_layers: 2,
            hidden_dim: 8,
            dropout: 0.5,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = GinModel::init(&config, 2, 2, &mut rng).unwrap();
        let g = with_features(
            Graph::new(0, 2, vec![(0, 1)], 0),
            vec![vec![1.0, 2.0], vec![-1.0, 0.5]],
        );
        let (eval_a, _) = loss_and_grads(&model, &[&g], &[1], None).unwrap();
        let (eval_b, _) = loss_and_grads(&model, &[&g], &[1], None).unwrap();
        assert_eq!(eval_a, eval_b);

        let mut d1 = ChaCha8Rng::seed_from_u64(100);
        let mut d2 = ChaCha8Rng::seed_from_u64(100);
        let (train_a, _) = loss_and_grads(&model, &[&g], &[1], Some(&mut d1)).unwrap();
        let (train_b, _) = loss_and_grads(&model, &[&g], &[1], Some(&mut d2)).unwrap();
        assert_eq!(train_a, train_b, "same dropout stream, same loss");
        assert_ne!(eval_a, train_a, "dropout must perturb the training loss");
    }
}
