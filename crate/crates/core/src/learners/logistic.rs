use ndarray::{Array1, Array2, ArrayView1};

use super::linear::{check_weights, design_matrix, LinearModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// Parameter norm beyond which the data are declared separable.
pub const SEPARATION_NORM: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    /// Gradient-norm tolerance, relative to `max(1, Σ wᵢ)`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Weighted negative log-likelihood `Σ wᵢ ln(1 + exp(-yᵢ θᵀx̃ᵢ))`.
pub fn logistic_objective(
    design: &Array2<f64>,
    y: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    theta: ArrayView1<f64>,
) -> f64 {
    let margins = design.dot(&theta);
    margins
        .iter()
        .zip(y)
        .zip(weights)
        .map(|((&f, &yi), &w)| w * softplus(-yi * f))
        .sum()
}

/// Gradient of [`logistic_objective`].
pub fn logistic_gradient(
    design: &Array2<f64>,
    y: ArrayView1<f64>,
    weights: ArrayView1<f64>,
    theta: ArrayView1<f64>,
) -> Array1<f64> {
    let margins = design.dot(&theta);
    let coef: Array1<f64> = margins
        .iter()
        .zip(y)
        .zip(weights)
        .map(|((&f, &yi), &w)| -w * yi * sigmoid(-yi * f))
        .collect();
    design.t().dot(&coef)
}

fn logistic_hessian(
    design: &Array2<f64>,
    weights: ArrayView1<f64>,
    theta: ArrayView1<f64>,
) -> Array2<f64> {
    let margins = design.dot(&theta);
    let p = design.ncols();
    let mut h = Array2::zeros((p, p));
    for ((row, &f), &w) in design.rows().into_iter().zip(&margins).zip(weights) {
        let s = w * sigmoid(f) * sigmoid(-f);
        if s == 0.0 {
            continue;
        }
        for a in 0..p {
            for b in 0..=a {
                h[[a, b]] += s * row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            h[[b, a]] = h[[a, b]];
        }
    }
    h
}

/// Weighted logistic regression by damped Newton from θ = 0.
pub fn fit_weighted_logistic(
    data: &Dataset,
    weights: ArrayView1<f64>,
    opts: LogisticOptions,
) -> Result<LinearModel> {
    check_weights(weights, data.n())?;
    data.check_binary()?;
    let design = design_matrix(data.x().view());
    let y = data.y().view();
    let threshold = opts.tol * weights.sum().max(1.0);
    let mut theta = Array1::<f64>::zeros(design.ncols());
    let mut objective = logistic_objective(&design, y, weights, theta.view());
    let mut grad_norm = f64::INFINITY;
    for _ in 0..=opts.max_iter {
        let grad = logistic_gradient(&design, y, weights, theta.view());
        grad_norm = grad.dot(&grad).sqrt();
        if grad_norm <= threshold {
            return Ok(LinearModel::from_params(theta.view()));
        }
        let hessian = logistic_hessian(&design, weights, theta.view());
        let step = Cholesky::with_jitter(&hessian)?.solve(grad.view());
        let mut t = 1.0;
        loop {
            let candidate = &theta - &(t * &step);
            let value = logistic_objective(&design, y, weights, candidate.view());
            if value <= objective || t < 1e-10 {
                theta = candidate;
                objective = value;
                break;
            }
            t *= 0.5;
        }
        let norm = theta.dot(&theta).sqrt();
        if norm > SEPARATION_NORM {
            return Err(Error::Separation(norm));
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        gradient_norm: grad_norm,
    })
}
