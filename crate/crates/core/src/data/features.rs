//! Degree-derived node features for datasets without intrinsic attributes.

use serde::{Deserialize, Serialize};

use crate::data::GraphDataset;
use crate::error::{Error, Result};

/// How node degrees are encoded as input features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    /// `(D_max + 1)`-dimensional indicator of the node degree, with `D_max`
    /// the maximum degree over the entire dataset.
    #[default]
    OneHot,
    /// Single feature `degree / D_max`.
    Scalar,
}

/// Replace every graph's node features with a degree encoding.
pub fn assign_degree_features(mut dataset: GraphDataset, mode: FeatureMode) -> Result<GraphDataset> {
    if dataset.is_empty() {
        return Err(Error::InvalidInput(
            "cannot assign degree features to an empty dataset".into(),
        ));
    }
    let d_max = dataset.max_degree();
    let dim = match mode {
        FeatureMode::OneHot => d_max + 1,
        FeatureMode::Scalar => 1,
    };
    for g in &mut dataset.graphs {
        let degrees = g.degrees();
        let mut features = vec![0.0; g.num_nodes * dim];
        for (v, &deg) in degrees.iter().enumerate() {
            match mode {
                FeatureMode::OneHot => features[v * dim + deg] = 1.0,
                FeatureMode::Scalar => {
                    features[v] = if d_max > 0 { deg as f64 / d_max as f64 } else { 0.0 }
                }
            }
        }
        g.node_features = features;
        g.feature_dim = dim;
    }
    dataset.feature_dim = dim;
    Ok(dataset)
}
