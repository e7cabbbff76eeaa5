use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::linear::check_weights;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// Rows with a smaller weight are dropped before the solve.
pub const MIN_WEIGHT: f64 = 1e-12;

/// Weighted RBF kernel ridge regression, fitted in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub support_points: Array2<f64>,
    pub dual_coefficients: Array1<f64>,
    pub bandwidth: f64,
    pub ridge: f64,
}

/// Hyperparameters; `None` selects the median-distance bandwidth and a ridge
/// of `1e-3 · n`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct KernelOptions {
    pub bandwidth: Option<f64>,
    pub ridge: Option<f64>,
}

fn squared_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum()
}

/// `k(a, b) = exp(-‖a - b‖² / (2 h²))`.
pub fn rbf(a: ArrayView1<f64>, b: ArrayView1<f64>, bandwidth: f64) -> f64 {
    (-squared_distance(a, b) / (2.0 * bandwidth * bandwidth)).exp()
}

pub fn gram_matrix(x: ArrayView2<f64>, bandwidth: f64) -> Array2<f64> {
    let n = x.nrows();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in 0..i {
            let v = rbf(x.row(i), x.row(j), bandwidth);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

/// Median of the pairwise Euclidean distances between rows.
pub fn median_heuristic(x: ArrayView2<f64>) -> f64 {
    let n = x.nrows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in 0..i {
            d.push(squared_distance(x.row(i), x.row(j)).sqrt());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    if *m > 0.0 {
        *m
    } else {
        1.0
    }
}

impl KernelModel {
    pub fn decision(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.rows()
            .into_iter()
            .map(|row| {
                self.support_points
                    .rows()
                    .into_iter()
                    .zip(&self.dual_coefficients)
                    .map(|(s, &a)| a * rbf(row, s, self.bandwidth))
                    .sum()
            })
            .collect()
    }
}

/// Solve `(K + ridge · W⁻¹) a = y` on the rows with non-negligible weight.
pub fn fit_weighted_kernel_ridge(
    data: &Dataset,
    weights: ArrayView1<f64>,
    opts: KernelOptions,
) -> Result<KernelModel> {
    check_weights(weights, data.n())?;
    let keep: Vec<usize> = (0..data.n())
        .filter(|&i| weights[i] >= MIN_WEIGHT)
        .collect();
    if keep.is_empty() {
        return Err(Error::InvalidParameter(
            "every weight is below the retention threshold".into(),
        ));
    }
    let x = data.x().select(Axis(0), &keep);
    let y = data.y().select(Axis(0), &keep);
    let w = weights.select(Axis(0), &keep);
    let bandwidth = opts.bandwidth.unwrap_or_else(|| median_heuristic(x.view()));
    let ridge = opts.ridge.unwrap_or(1e-3 * keep.len() as f64);
    if !(bandwidth > 0.0) || !bandwidth.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    if !(ridge > 0.0) || !ridge.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ridge must be positive, got {ridge}"
        )));
    }
    // Symmetric scaling: (W½ K W½ + ridge I) b = W½ y, a = W½ b.
    let root_w = w.mapv(f64::sqrt);
    let mut system = gram_matrix(x.view(), bandwidth);
    for ((i, j), v) in system.indexed_iter_mut() {
        *v *= root_w[i] * root_w[j];
    }
    system.diag_mut().mapv_inplace(|v| v + ridge);
    let b = Cholesky::with_jitter(&system)?.solve((&root_w * &y).view());
    Ok(KernelModel {
        support_points: x,
        dual_coefficients: &root_w * &b,
        bandwidth,
        ridge,
    })
}
