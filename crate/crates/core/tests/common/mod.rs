//! Shared test oracles, independent of the implementation paths they check:
//! a Gaussian-elimination linear solver, exhaustive active-set enumeration,
//! and projected gradient descent for the non-negative quadratic program.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ginnk_core::nnk::NnkProblem;

/// Objective `1 - 2 theta' b + theta' A theta`.
pub fn objective(gram: &Array2<f64>, sims: &Array1<f64>, theta: &[f64]) -> f64 {
    let theta = Array1::from(theta.to_vec());
    1.0 - 2.0 * theta.dot(sims) + theta.dot(&gram.dot(&theta))
}

/// Dense linear solve by Gaussian elimination with partial pivoting.
/// Returns `None` for (numerically) singular systems.
pub fn gauss_solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m = vec![vec![0.0f64; n + 1]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = a[(i, j)];
        }
        m[i][n] = b[i];
    }
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| m[r1][col].abs().partial_cmp(&m[r2][col].abs()).unwrap())?;
        if m[pivot_row][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = m[row][col] / m[col][col];
            for j in col..=n {
                m[row][j] -= factor * m[col][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = m[row][n];
        for j in (row + 1)..n {
            acc -= m[row][j] * x[j];
        }
        x[row] = acc / m[row][row];
    }
    Some(x)
}

/// Every feasible candidate found by exhaustive active-set enumeration:
/// for each subset S, solve the equality-constrained system on S and keep
/// the solution if it is non-negative. The all-zero vector is included.
pub fn enumerate_feasible(gram: &Array2<f64>, sims: &Array1<f64>) -> Vec<Vec<f64>> {
    let k = sims.len();
    assert!(k <= 16, "enumeration oracle is exponential in k");
    let mut out = vec![vec![0.0; k]];
    for mask in 1u32..(1 << k) {
        let subset: Vec<usize> = (0..k).filter(|&i| mask & (1 << i) != 0).collect();
        let p = subset.len();
        let mut sub = Array2::zeros((p, p));
        let mut rhs = Array1::zeros(p);
        for (r, &i) in subset.iter().enumerate() {
            rhs[r] = sims[i];
            for (c, &j) in subset.iter().enumerate() {
                sub[(r, c)] = gram[(i, j)];
            }
        }
        let Some(solution) = gauss_solve(&sub, &rhs) else {
            continue;
        };
        if solution.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let mut full = vec![0.0; k];
        for (r, &i) in subset.iter().enumerate() {
            full[i] = solution[r].max(0.0);
        }
        out.push(full);
    }
    out
}

/// The enumeration oracle's optimum: the feasible candidate with the
/// smallest objective.
pub fn enumeration_optimum(gram: &Array2<f64>, sims: &Array1<f64>) -> (Vec<f64>, f64) {
    enumerate_feasible(gram, sims)
        .into_iter()
        .map(|theta| {
            let obj = objective(gram, sims, &theta);
            (theta, obj)
        })
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .expect("the zero vector is always feasible")
}

/// Projected gradient descent run to a tight tolerance.
pub fn projected_gradient(gram: &Array2<f64>, sims: &Array1<f64>, tol: f64) -> Vec<f64> {
    let k = sims.len();
    // 1 / Lipschitz bound of the gradient 2(A theta - b).
    let row_sum_bound: f64 = (0..k)
        .map(|i| (0..k).map(|j| gram[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / (2.0 * row_sum_bound);
    let mut theta = Array1::zeros(k);
    for _ in 0..400_000 {
        let gradient = 2.0 * (&gram.dot(&theta) - sims);
        let mut moved = 0.0f64;
        for i in 0..k {
            let updated = (theta[i] - step * gradient[i]).max(0.0);
            moved = moved.max((updated - theta[i]).abs());
            theta[i] = updated;
        }
        if moved < tol {
            break;
        }
    }
    theta.to_vec()
}

/// Random quadratic program with an RBF Gram matrix (PSD, entries in
/// `(0, 1]`) over clustered points, mirroring trained-embedding geometry.
pub fn random_problem(rng: &mut ChaCha8Rng, k: usize, dim: usize, jitter: f64) -> NnkProblem {
    let num_clusters = 3.max(k / 10);
    let centers: Vec<Vec<f64>> = (0..num_clusters)
        .map(|_| (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect())
        .collect();
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(k);
    for _ in 0..k {
        let c = &centers[rng.gen_range(0..num_clusters)];
        points.push(c.iter().map(|&x| x + rng.gen_range(-1.0..1.0)).collect());
    }
    let query: Vec<f64> = {
        let c = &centers[rng.gen_range(0..num_clusters)];
        c.iter().map(|&x| x + rng.gen_range(-1.0..1.0)).collect()
    };
    let bandwidth = 2.0;
    let kernel = |a: &[f64], b: &[f64]| -> f64 {
        let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        (-sq / (2.0 * bandwidth * bandwidth)).exp()
    };
    let mut gram = Array2::zeros((k, k));
    let mut sims = Array1::zeros(k);
    for i in 0..k {
        gram[(i, i)] = 1.0 + jitter;
        sims[i] = kernel(&points[i], &query);
        for j in (i + 1)..k {
            let v = kernel(&points[i], &points[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    NnkProblem {
        gram,
        query_similarities: sims,
        neighbor_ids: (0..k).collect(),
        neighbor_labels: (0..k).map(|i| i % 2).collect(),
        jitter,
    }
}
