use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// Relative pivot floor for the normal equations; below it the weighted
/// design is declared rank deficient.
const RANK_TOLERANCE: f64 = 1e-12;

/// `ŷ = intercept + coefficientsᵀ x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub coefficients: Array1<f64>,
    pub intercept: f64,
}

impl LinearModel {
    /// Parameters as `[intercept, coefficients...]`.
    pub fn from_params(theta: ArrayView1<f64>) -> Self {
        LinearModel {
            coefficients: theta.slice(ndarray::s![1..]).to_owned(),
            intercept: theta[0],
        }
    }

    pub fn params(&self) -> Array1<f64> {
        let mut theta = Array1::zeros(self.coefficients.len() + 1);
        theta[0] = self.intercept;
        theta.slice_mut(ndarray::s![1..]).assign(&self.coefficients);
        theta
    }

    pub fn decision(&self, x: ArrayView2<f64>) -> Array1<f64> {
        x.dot(&self.coefficients) + self.intercept
    }
}

/// `[1 | X]`.
pub fn design_matrix(x: ArrayView2<f64>) -> Array2<f64> {
    let mut out = Array2::ones((x.nrows(), x.ncols() + 1));
    out.slice_mut(ndarray::s![.., 1..]).assign(&x);
    out
}

pub(crate) fn check_weights(weights: ArrayView1<f64>, n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: weights.len(),
        });
    }
    if let Some(i) = weights.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "weight {i} = {} is not a finite nonnegative number",
            weights[i]
        )));
    }
    if !weights.iter().any(|&w| w > 0.0) {
        return Err(Error::InvalidParameter("all weights are zero".into()));
    }
    Ok(())
}

/// Weighted Gram matrix `X̃ᵀ W X̃` and moment `X̃ᵀ W y`.
pub(crate) fn weighted_normal_equations(
    design: &Array2<f64>,
    y: ArrayView1<f64>,
    weights: ArrayView1<f64>,
) -> (Array2<f64>, Array1<f64>) {
    let p = design.ncols();
    let mut gram = Array2::zeros((p, p));
    let mut moment = Array1::zeros(p);
    for ((row, &w), &yi) in design.rows().into_iter().zip(weights).zip(y) {
        if w == 0.0 {
            continue;
        }
        for a in 0..p {
            let wa = w * row[a];
            moment[a] += wa * yi;
            for b in 0..=a {
                gram[[a, b]] += wa * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[[b, a]] = gram[[a, b]];
        }
    }
    (gram, moment)
}

/// Minimizer of `Σ wᵢ (yᵢ - β₀ - βᵀxᵢ)²`. Zero weights are allowed.
pub fn fit_weighted_linear(data: &Dataset, weights: ArrayView1<f64>) -> Result<LinearModel> {
    check_weights(weights, data.n())?;
    let design = design_matrix(data.x().view());
    let (gram, moment) = weighted_normal_equations(&design, data.y().view(), weights);
    let chol = Cholesky::new(&gram, RANK_TOLERANCE)
        .map_err(|e| Error::Singular(format!("weighted design is rank deficient ({e})")))?;
    let theta = chol.solve(moment.view());
    Ok(LinearModel::from_params(theta.view()))
}
