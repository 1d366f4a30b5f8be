//! Non-negative kernel interpolation: expresses a query embedding as a
//! non-negative combination of its retrieved neighbors in kernel feature
//! space, then predicts by convexly combining the active neighbors' labels.
//! The active set doubles as an example-based explanation of the decision.

mod cholesky;
mod kernel;
mod predict;
mod solver;

pub use kernel::{kernel_eval, KernelKind, KernelSpec};
pub use predict::{argmax_class, explain, kri_check, nnk_predict, Explanation, NeighborAttribution};
pub use solver::{solve_nnqp, NnkSolution, NnkSolverParams};

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::knn::{NeighborIndex, NeighborList};

/// One query's quadratic program: the neighborhood Gram matrix (diagonal
/// jittered), the query-to-neighbor similarities, and the neighbor metadata
/// needed for prediction and explanation.
#[derive(Debug, Clone)]
pub struct NnkProblem {
    /// `k x k` kernel matrix between all pairs of neighbors.
    pub gram: Array2<f64>,
    /// Kernel similarities between the query and each neighbor.
    pub query_similarities: Array1<f64>,
    /// Training graph ids, aligned with the rows of `gram`.
    pub neighbor_ids: Vec<usize>,
    pub neighbor_labels: Vec<usize>,
    pub jitter: f64,
}

impl NnkProblem {
    pub fn len(&self) -> usize {
        self.query_similarities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Assemble the quadratic program for one query from its neighbor list.
pub fn build_problem(
    spec: &KernelSpec,
    query: &ArrayView1<f64>,
    neighbors: &NeighborList,
    index: &NeighborIndex,
) -> Result<NnkProblem> {
    spec.validate()?;
    if neighbors.is_empty() {
        return Err(Error::InvalidInput("empty neighbor list".into()));
    }
    let k = neighbors.len();
    let with_context = |row: usize, err: Error| -> Error {
        Error::Numeric(format!(
            "kernel evaluation failed for neighbor {} (graph {}): {err}",
            row,
            index.graph_id(neighbors.ids[row])
        ))
    };

    let mut gram = Array2::zeros((k, k));
    for i in 0..k {
        gram[(i, i)] = 1.0 + spec.jitter;
        let vi = index.vector(neighbors.ids[i]);
        for j in (i + 1)..k {
            let vj = index.vector(neighbors.ids[j]);
            let value = kernel_eval(spec, &vi, &vj).map_err(|e| with_context(j, e))?;
            gram[(i, j)] = value;
            gram[(j, i)] = value;
        }
    }
    let mut query_similarities = Array1::zeros(k);
    for i in 0..k {
        let vi = index.vector(neighbors.ids[i]);
        query_similarities[i] = kernel_eval(spec, &vi, query).map_err(|e| with_context(i, e))?;
    }
    Ok(NnkProblem {
        gram,
        query_similarities,
        neighbor_ids: neighbors.ids.iter().map(|&r| index.graph_id(r)).collect(),
        neighbor_labels: neighbors.ids.iter().map(|&r| index.label(r)).collect(),
        jitter: spec.jitter,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Split;
    use crate::gin::EmbeddingSet;
    use crate::knn::{build_index, query, MetricKind};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn index_over(rows: Vec<Vec<f64>>) -> NeighborIndex {
        let dim = rows[0].len();
        let mut vectors = Array2::zeros((rows.len(), dim));
        for (i, r) in rows.iter().enumerate() {
            vectors.row_mut(i).assign(&ArrayView1::from(r.as_slice()));
        }
        let n = rows.len();
        let set = EmbeddingSet {
            vectors,
            labels: vec![0; n],
            graph_ids: (0..n).collect(),
            splits: vec![Split::Train; n],
        };
        build_index(&set, MetricKind::Euclidean).unwrap()
    }

    #[test]
    fn single_neighbor_equal_to_query() {
        let index = index_over(vec![vec![1.0, 2.0]]);
        let q = array![1.0, 2.0];
        let neighbors = query(&index, &q.view(), 1).unwrap();
        let spec = KernelSpec::default();
        let p = build_problem(&spec, &q.view(), &neighbors, &index).unwrap();
        assert_abs_diff_eq!(p.gram[(0, 0)], 1.0 + spec.jitter, epsilon = 1e-15);
        assert_abs_diff_eq!(p.query_similarities[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicate_neighbors_fill_off_diagonal_with_one() {
        let index = index_over(vec![vec![3.0, 4.0], vec![3.0, 4.0]]);
        let q = array![3.0, 4.0];
        let neighbors = query(&index, &q.view(), 2).unwrap();
        let p = build_problem(&KernelSpec::default(), &q.view(), &neighbors, &index).unwrap();
        assert_abs_diff_eq!(p.gram[(0, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.gram[(1, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn gram_is_symmetric_and_bounded() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let t = i as f64;
                vec![t.sin() + 1.1, (0.3 * t).cos(), 0.5 * t]
            })
            .collect();
        let index = index_over(rows);
        let q = array![0.4, 0.7, 2.0];
        let neighbors = query(&index, &q.view(), 8).unwrap();
        let p = build_problem(&KernelSpec::default(), &q.view(), &neighbors, &index).unwrap();
        for i in 0..p.len() {
            for j in 0..p.len() {
                assert_abs_diff_eq!(p.gram[(i, j)], p.gram[(j, i)], epsilon = 1e-12);
                if i != j {
                    assert!((0.0..=1.0).contains(&p.gram[(i, j)]));
                }
            }
        }
    }

    #[test]
    fn empty_neighbor_list_is_invalid() {
        let index = index_over(vec![vec![1.0]]);
        let empty = NeighborList {
            ids: vec![],
            distances: vec![],
        };
        assert!(matches!(
            build_problem(&KernelSpec::default(), &array![1.0].view(), &empty, &index),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn kernel_failure_names_the_neighbor() {
        let index = index_over(vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        let q = array![1.0, 0.0];
        let neighbors = query(&index, &q.view(), 2).unwrap();
        let err = build_problem(&KernelSpec::default(), &q.view(), &neighbors, &index).unwrap_err();
        match err {
            Error::Numeric(msg) => assert!(msg.contains("graph 1"), "{msg}"),
            other => panic!("expected Numeric, got {other:?}"),
        }
    }
}
