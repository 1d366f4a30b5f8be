//! Label interpolation, the kernel-ratio-interval diagnostic, and
//! example-based explanations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nnk::solver::NnkSolution;
use crate::nnk::NnkProblem;

/// Class probabilities as the convex combination of one-hot neighbor labels
/// weighted by the normalized coefficients. `labels` is indexed like the
/// problem's neighbors.
pub fn nnk_predict(
    solution: &NnkSolution,
    labels: &[usize],
    num_classes: usize,
) -> Result<Vec<f64>> {
    if solution.active.is_empty() {
        return Err(Error::EmptyActiveSet);
    }
    let mut probs = vec![0.0; num_classes];
    for (&i, &w) in solution.active.iter().zip(&solution.weights) {
        let label = labels[i];
        if label >= num_classes {
            return Err(Error::InvalidInput(format!(
                "neighbor label {label} exceeds class count {num_classes}"
            )));
        }
        probs[label] += w;
    }
    Ok(probs)
}

/// Argmax with ties toward the smaller class index.
pub fn argmax_class(probs: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Kernel ratio interval: can neighbors j and k coexist in the active set
/// of query i? True iff `K_jk < K_ij / K_ik < 1 / K_jk` strictly.
/// All inputs must lie in `(0, 1]`.
pub fn kri_check(k_ij: f64, k_ik: f64, k_jk: f64) -> Result<bool> {
    if k_ik == 0.0 {
        return Err(Error::Numeric("KRI ratio undefined: K_ik = 0".into()));
    }
    for (name, v) in [("K_ij", k_ij), ("K_ik", k_ik), ("K_jk", k_jk)] {
        if !(v > 0.0 && v <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "{name} = {v} outside (0, 1]"
            )));
        }
    }
    let ratio = k_ij / k_ik;
    Ok(k_jk < ratio && ratio < 1.0 / k_jk)
}

/// One neighbor's contribution to a prediction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeighborAttribution {
    #[serde(rename = "id")]
    pub graph_id: usize,
    pub label: usize,
    pub weight: f64,
    /// Kernel similarity between the query and this neighbor.
    pub similarity: f64,
}

/// Example-based explanation: exactly the active neighbors, sorted by
/// descending weight, plus the prediction they produce.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Explanation {
    pub query_id: usize,
    pub predicted: usize,
    pub probs: Vec<f64>,
    pub neighbors: Vec<NeighborAttribution>,
    /// Set when the active set was empty and the nearest neighbor's label
    /// was used instead.
    #[serde(default)]
    pub fallback: bool,
}

/// Assemble the explanation record for a solved problem.
pub fn explain(
    query_id: usize,
    solution: &NnkSolution,
    problem: &NnkProblem,
    num_classes: usize,
) -> Result<Explanation> {
    let probs = nnk_predict(solution, &problem.neighbor_labels, num_classes)?;
    let predicted = argmax_class(&probs);
    let mut neighbors: Vec<NeighborAttribution> = solution
        .active
        .iter()
        .zip(&solution.weights)
        .map(|(&i, &w)| NeighborAttribution {
            graph_id: problem.neighbor_ids[i],
            label: problem.neighbor_labels[i],
            weight: w,
            similarity: problem.query_similarities[i],
        })
        .collect();
    neighbors.sort_by(|a, b| b.weight.partial_cmp(&a.weight).unwrap());
    Ok(Explanation {
        query_id,
        predicted,
        probs,
        neighbors,
        fallback: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{array, Array2};

    fn solution(theta: Vec<f64>, tau: f64) -> NnkSolution {
        let active: Vec<usize> = theta
            .iter()
            .enumerate()
            .filter_map(|(i, &t)| (t > tau).then_some(i))
            .collect();
        let mass: f64 = active.iter().map(|&i| theta[i]).sum();
        let weights = active.iter().map(|&i| theta[i] / mass).collect();
        NnkSolution {
            theta,
            active,
            weights,
            objective: 0.0,
            iterations: 0,
        }
    }

    #[test]
    fn convex_combination_matches_hand_arithmetic() {
        let sol = solution(vec![0.3, 0.1], 0.0);
        let probs = nnk_predict(&sol, &[0, 1], 2).unwrap();
        assert_abs_diff_eq!(probs[0], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(probs[1], 0.25, epsilon = 1e-12);
        assert_eq!(argmax_class(&probs), 0);
    }

    #[test]
    fn unanimous_neighborhood_is_certain() {
        let sol = solution(vec![0.5, 0.2, 0.05], 0.0);
        let probs = nnk_predict(&sol, &[1, 1, 1], 2).unwrap();
        assert_eq!(probs[0], 0.0);
        assert_abs_diff_eq!(probs[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_active_set_signals_fallback() {
        let sol = NnkSolution {
            theta: vec![0.0, 0.0],
            active: vec![],
            weights: vec![],
            objective: 1.0,
            iterations: 0,
        };
        assert!(matches!(
            nnk_predict(&sol, &[0, 1], 2),
            Err(Error::EmptyActiveSet)
        ));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let sol = solution(vec![0.9, 0.4, 0.1, 0.02], 0.0);
        let probs = nnk_predict(&sol, &[0, 2, 1, 2], 3).unwrap();
        let total: f64 = probs.iter().sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        assert!(probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn kri_plug_in_cases() {
        assert!(kri_check(0.8, 0.9, 0.5).unwrap());
        assert!(!kri_check(0.8, 0.9, 1.0).unwrap(), "coincident neighbors leave an empty interval");
        assert!(!kri_check(0.9, 0.3, 0.5).unwrap(), "ratio 3.0 falls outside (0.5, 2)");
    }

    #[test]
    fn kri_rejects_out_of_range_inputs() {
        assert!(matches!(kri_check(0.5, 0.0, 0.5), Err(Error::Numeric(_))));
        assert!(matches!(
            kri_check(1.5, 0.5, 0.5),
            Err(Error::InvalidInput(_))
        ));
    }

    fn toy_problem(labels: Vec<usize>) -> NnkProblem {
        let k = labels.len();
        NnkProblem {
            gram: Array2::eye(k),
            query_similarities: array![0.9, 0.6, 0.3].slice(ndarray::s![..k]).to_owned(),
            neighbor_ids: (10..10 + k).collect(),
            neighbor_labels: labels,
            jitter: 0.0,
        }
    }

    #[test]
    fn explanation_sorts_by_descending_weight() {
        let problem = toy_problem(vec![0, 1, 0]);
        let sol = solution(vec![0.3, 0.0, 0.7], 0.0);
        let exp = explain(42, &sol, &problem, 2).unwrap();
        assert_eq!(exp.query_id, 42);
        assert_eq!(exp.neighbors.len(), 2);
        assert_eq!(exp.neighbors[0].graph_id, 12);
        assert_abs_diff_eq!(exp.neighbors[0].weight, 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(exp.neighbors[1].weight, 0.3, epsilon = 1e-12);
        assert_eq!(exp.predicted, 0);
    }

    #[test]
    fn single_active_neighbor_has_weight_one() {
        let problem = toy_problem(vec![1, 0, 0]);
        let sol = solution(vec![0.4, 0.0, 0.0], 0.0);
        let exp = explain(7, &sol, &problem, 2).unwrap();
        assert_eq!(exp.neighbors.len(), 1);
        assert_abs_diff_eq!(exp.neighbors[0].weight, 1.0, epsilon = 1e-12);
        assert_eq!(exp.predicted, 1);
    }

    #[test]
    fn explanation_weights_resum_to_probabilities() {
        let problem = toy_problem(vec![0, 1, 1]);
        let sol = solution(vec![0.25, 0.5, 0.25], 0.0);
        let exp = explain(0, &sol, &problem, 2).unwrap();
        let mut resum = vec![0.0; 2];
        for n in &exp.neighbors {
            resum[n.label] += n.weight;
        }
        for (a, b) in resum.iter().zip(exp.probs.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}
