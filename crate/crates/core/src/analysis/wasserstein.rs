use crate::error::{ensure_dim, DrppError, Result};
use crate::linalg::dist;

pub const MAX_W1_SIZE: usize = 512;

/// Exact `W1` between two uniform empirical measures of equal size with
/// Euclidean ground cost, via an optimal assignment.
pub fn wasserstein1_exact(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    let n = a.len();
    if n != b.len() {
        return Err(DrppError::InvalidArgument(format!("W1 needs equal sizes, got {n} and {}", b.len())));
    }
    if n == 0 || n > MAX_W1_SIZE {
        return Err(DrppError::InvalidArgument(format!("W1 size {n} outside 1..={MAX_W1_SIZE}")));
    }
    let dim = a[0].len();
    for x in a.iter().chain(b) {
        ensure_dim("W1 point", dim, x.len())?;
    }
    let cost: Vec<f64> = a.iter().flat_map(|x| b.iter().map(move |y| dist(x, y))).collect();
    let assignment = min_cost_assignment(&cost, n);
    let total: f64 = assignment.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Ok(total / n as f64)
}

/// Hungarian algorithm with potentials on a dense `n x n` cost matrix.
/// Returns the column assigned to each row.
pub(crate) fn min_cost_assignment(cost: &[f64], n: usize) -> Vec<usize> {
    // 1-based arrays; column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}
