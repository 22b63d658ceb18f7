//! Gauss–Hermite rule for expectations over a standard normal variable.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Nodes and weights such that `Σ w_i f(x_i) ≈ E[f(X)]` for `X ~ N(0, 1)`,
/// exact for polynomials of degree ≤ 2n − 1. Weights sum to one.
///
/// Computed with the Golub–Welsch construction: the nodes are the
/// eigenvalues of the Jacobi matrix of the probabilists' Hermite
/// polynomials (off-diagonal entries √k) and the weights are the squared
/// first components of the normalised eigenvectors.
pub fn gauss_hermite(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidQuadratureOrder);
    }
    if n == 1 {
        return Ok((vec![0.0], vec![1.0]));
    }
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Symmetrise: x_i = −x_{n−1−i}, w_i = w_{n−1−i}.
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let j = n - 1 - i;
        nodes[i] = 0.5 * (pairs[i].0 - pairs[j].0);
        weights[i] = 0.5 * (pairs[i].1 + pairs[j].1);
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    Ok((nodes, weights))
}
