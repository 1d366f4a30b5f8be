//! Non-negative quadratic program solved by an active-set method with
//! Cholesky factorization of the working-set principal submatrix.
//!
//! Minimizes `1 - 2 theta' b + theta' A theta` over `theta >= 0`, where
//! `A` is the neighborhood Gram matrix and `b` the query similarities.
//! The working set holds the strictly positive coordinates; each change
//! refactors the submatrix (k stays small, so O(p^3) refactorization is
//! cheaper to audit than rank-one updates).

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::nnk::cholesky::solve_spd;
use crate::nnk::NnkProblem;

/// Solver knobs. `tolerance` bounds the KKT residual; coefficients at or
/// below `tau_edge` are zeroed after optimization, before normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnkSolverParams {
    pub tolerance: f64,
    pub tau_edge: f64,
}

impl Default for NnkSolverParams {
    fn default() -> Self {
        NnkSolverParams {
            tolerance: 1e-9,
            tau_edge: 1e-10,
        }
    }
}

/// Solution of the non-negative quadratic program.
#[derive(Debug, Clone)]
pub struct NnkSolution {
    /// Full-length coefficient vector, entries at or below `tau_edge` zeroed.
    pub theta: Vec<f64>,
    /// Indices with `theta > tau_edge`, ascending.
    pub active: Vec<usize>,
    /// Normalized weights over the active set, aligned with `active`.
    /// Empty when the active set is empty.
    pub weights: Vec<f64>,
    /// Quadratic objective value at `theta`.
    pub objective: f64,
    /// Working-set changes performed.
    pub iterations: usize,
}

impl NnkSolution {
    /// Count of active neighbors (the paper's k-hat).
    pub fn active_count(&self) -> usize {
        self.active.len()
    }
}

/// Solve the non-negative quadratic program for one query neighborhood.
pub fn solve_nnqp(problem: &NnkProblem, params: &NnkSolverParams) -> Result<NnkSolution> {
    let k = problem.len();
    let a = &problem.gram;
    let b = &problem.query_similarities;
    let tol = params.tolerance;
    let max_iterations = 10 * k;

    let mut theta = Array1::<f64>::zeros(k);
    let mut working: Vec<usize> = Vec::new();
    let mut in_working = vec![false; k];
    // Coordinates that failed to enter (non-positive subproblem value);
    // cleared whenever theta makes progress.
    let mut banned = vec![false; k];
    let mut iterations = 0usize;

    loop {
        // Negative gradient b - A theta; candidates are zero coordinates.
        let gradient = b - &a.dot(&theta);
        let mut candidate: Option<usize> = None;
        for i in 0..k {
            if in_working[i] || banned[i] {
                continue;
            }
            if gradient[i] > tol && candidate.map(|c| gradient[i] > gradient[c]).unwrap_or(true) {
                candidate = Some(i);
            }
        }
        let Some(entering) = candidate else {
            // No eligible candidate left. A coordinate rejected as
            // numerically degenerate must not be left violating KKT.
            let worst_banned = (0..k)
                .filter(|&i| banned[i] && !in_working[i])
                .map(|i| gradient[i])
                .fold(f64::NEG_INFINITY, f64::max);
            if worst_banned > tol {
                return Err(Error::SolverIterationCap {
                    iterations,
                    kkt_residual: worst_banned,
                });
            }
            break; // KKT conditions hold within tolerance
        };

        working.push(entering);
        in_working[entering] = true;

        // Inner loop: restore primal feasibility on the working set.
        loop {
            iterations += 1;
            if iterations > max_iterations {
                let residual = kkt_residual(a, b, &theta, tol);
                return Err(Error::SolverIterationCap {
                    iterations: max_iterations,
                    kkt_residual: residual,
                });
            }

            let trial = solve_working_set(a, b, &working, problem.jitter)?;

            if let Some(pos) = working.iter().position(|&i| i == entering) {
                if trial[pos] <= 0.0 && theta[entering] == 0.0 {
                    // The entering coordinate refused to become positive
                    // (numerically degenerate direction): reject it until
                    // the next successful step.
                    working.remove(pos);
                    in_working[entering] = false;
                    banned[entering] = true;
                    break;
                }
            }

            if trial.iter().all(|&v| v > 0.0) {
                for (pos, &i) in working.iter().enumerate() {
                    theta[i] = trial[pos];
                }
                banned.fill(false);
                break;
            }

            // Standard step-length rule toward the trial point; the
            // limiting coordinate is removed unconditionally so the inner
            // loop always shrinks the working set.
            let mut alpha = 1.0f64;
            let mut limiting = None;
            for (pos, &i) in working.iter().enumerate() {
                if trial[pos] <= 0.0 {
                    let step = theta[i] / (theta[i] - trial[pos]);
                    if step < alpha || limiting.is_none() {
                        alpha = step.min(alpha);
                        limiting = Some(i);
                    }
                }
            }
            for (pos, &i) in working.iter().enumerate() {
                theta[i] += alpha * (trial[pos] - theta[i]);
            }
            let mut dropped = vec![limiting.expect("inner loop ran because some trial <= 0")];
            for (pos, &i) in working.iter().enumerate() {
                if trial[pos] <= 0.0 && theta[i] <= f64::EPSILON * 16.0 {
                    dropped.push(i);
                }
            }
            for &i in &dropped {
                theta[i] = 0.0;
                in_working[i] = false;
            }
            working.retain(|i| !dropped.contains(i));
            if working.is_empty() {
                break;
            }
        }
    }

    finalize(problem, theta, iterations, params)
}

/// Solve the equality-constrained subproblem `A[W,W] x = b[W]`, escalating
/// the extra diagonal jitter twice (x10 each) before giving up.
fn solve_working_set(
    a: &Array2<f64>,
    b: &Array1<f64>,
    working: &[usize],
    base_jitter: f64,
) -> Result<Array1<f64>> {
    let p = working.len();
    let mut sub = Array2::zeros((p, p));
    let mut rhs = Array1::zeros(p);
    for (r, &i) in working.iter().enumerate() {
        rhs[r] = b[i];
        for (c, &j) in working.iter().enumerate() {
            sub[(r, c)] = a[(i, j)];
        }
    }
    let escalation = if base_jitter > 0.0 { base_jitter } else { 1e-10 };
    for attempt in 0..3 {
        if attempt > 0 {
            let extra = escalation * 10f64.powi(attempt);
            for d in 0..p {
                sub[(d, d)] += extra;
            }
        }
        if let Some(x) = solve_spd(&sub, &rhs) {
            return Ok(x);
        }
    }
    Err(Error::SolverBreakdown {
        working_set: working.to_vec(),
    })
}

/// Worst KKT violation: negativity, zero-coordinate descent direction, or
/// active-coordinate gradient magnitude.
fn kkt_residual(a: &Array2<f64>, b: &Array1<f64>, theta: &Array1<f64>, tol: f64) -> f64 {
    let gradient = &a.dot(theta) - b;
    let mut worst = 0.0f64;
    for i in 0..theta.len() {
        worst = worst.max(-theta[i]);
        if theta[i] > tol {
            worst = worst.max(gradient[i].abs());
        } else {
            worst = worst.max(-gradient[i]);
        }
    }
    worst
}

fn finalize(
    problem: &NnkProblem,
    mut theta: Array1<f64>,
    iterations: usize,
    params: &NnkSolverParams,
) -> Result<NnkSolution> {
    let mut active = Vec::new();
    for (i, t) in theta.iter_mut().enumerate() {
        if *t > params.tau_edge {
            active.push(i);
        } else {
            *t = 0.0;
        }
    }
    let mass: f64 = active.iter().map(|&i| theta[i]).sum();
    let weights = if mass > 0.0 {
        active.iter().map(|&i| theta[i] / mass).collect()
    } else {
        Vec::new()
    };
    let objective =
        1.0 - 2.0 * theta.dot(&problem.query_similarities) + theta.dot(&problem.gram.dot(&theta));
    Ok(NnkSolution {
        theta: theta.to_vec(),
        active,
        weights,
        objective,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn problem(gram: Array2<f64>, sims: Array1<f64>) -> NnkProblem {
        let k = sims.len();
        NnkProblem {
            gram,
            query_similarities: sims,
            neighbor_ids: (0..k).collect(),
            neighbor_labels: vec![0; k],
            jitter: 0.0,
        }
    }

    #[test]
    fn single_neighbor_reconstructs_exactly() {
        let p = problem(array![[1.0]], array![1.0]);
        let sol = solve_nnqp(&p, &NnkSolverParams::default()).unwrap();
        assert_abs_diff_eq!(sol.theta[0], 1.0, epsilon = 1e-12);
        assert_eq!(sol.active, vec![0]);
        assert_abs_diff_eq!(sol.weights[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.objective, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_gram_keeps_unconstrained_optimum() {
        let p = problem(Array2::eye(2), array![0.6, 0.2]);
        let sol = solve_nnqp(&p, &NnkSolverParams::default()).unwrap();
        assert_abs_diff_eq!(sol.theta[0], 0.6, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.theta[1], 0.2, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.weights[0], 0.75, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.weights[1], 0.25, epsilon = 1e-9);
    }

    #[test]
    fn negative_unconstrained_coordinate_goes_inactive() {
        // Unconstrained solution of this system is [1.237, -0.263]; the
        // constrained optimum clamps coordinate 1 to zero.
        let p = problem(array![[1.0, 0.9], [0.9, 1.0]], array![1.0, 0.85]);
        let sol = solve_nnqp(&p, &NnkSolverParams::default()).unwrap();
        assert_eq!(sol.active, vec![0]);
        assert_abs_diff_eq!(sol.theta[0], 1.0, epsilon = 1e-9);
        assert_eq!(sol.theta[1], 0.0);
    }

    #[test]
    fn kkt_conditions_hold_on_a_dense_instance() {
        let gram = array![
            [1.0, 0.8, 0.3, 0.5],
            [0.8, 1.0, 0.4, 0.6],
            [0.3, 0.4, 1.0, 0.2],
            [0.5, 0.6, 0.2, 1.0]
        ];
        let sims = array![0.9, 0.85, 0.4, 0.55];
        let p = problem(gram.clone(), sims.clone());
        let params = NnkSolverParams {
            tau_edge: 0.0,
            ..Default::default()
        };
        let sol = solve_nnqp(&p, &params).unwrap();
        let theta = Array1::from(sol.theta.clone());
        let gradient = &gram.dot(&theta) - &sims;
        for i in 0..4 {
            assert!(theta[i] >= 0.0);
            if theta[i] > 0.0 {
                assert!(gradient[i].abs() <= 1e-9, "active gradient {}", gradient[i]);
            } else {
                assert!(gradient[i] >= -1e-9, "inactive gradient {}", gradient[i]);
            }
        }
    }

    #[test]
    fn tau_edge_prunes_tiny_coefficients() {
        let p = problem(Array2::eye(2), array![0.5, 1e-12]);
        let sol = solve_nnqp(
            &p,
            &NnkSolverParams {
                tolerance: 1e-15,
                tau_edge: 1e-10,
            },
        )
        .unwrap();
        assert_eq!(sol.active, vec![0]);
        assert_eq!(sol.theta[1], 0.0);
        assert_abs_diff_eq!(sol.weights[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn duplicate_neighbors_stay_solvable_via_jitter() {
        // Two identical neighbors: rank-deficient without jitter.
        let jitter = 1e-8;
        let mut gram = array![[1.0, 1.0], [1.0, 1.0]];
        for d in 0..2 {
            gram[(d, d)] += jitter;
        }
        let p = NnkProblem {
            gram,
            query_similarities: array![1.0, 1.0],
            neighbor_ids: vec![0, 1],
            neighbor_labels: vec![0, 0],
            jitter,
        };
        let sol = solve_nnqp(&p, &NnkSolverParams::default()).unwrap();
        let total: f64 = sol.theta.iter().sum();
        assert!((total - 1.0).abs() < 1e-6, "mass {total}");
    }
}
