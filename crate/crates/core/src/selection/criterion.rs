//! The information criterion for weighted estimators,
//!
//! ```text
//! IC = -2 Σ dr(xᵢ) log p(yᵢ | xᵢ, θ̂_w) + 2 tr(Ĵ_w Ĥ_w⁻¹)
//! ```
//!
//! where `θ̂_w` minimizes the `w^{(λ,α)}`-weighted negative log-likelihood,
//! `dr = p_te/p_tr`, `Ĵ_w = Σ dr wᵢ gᵢ gᵢᵀ` and `Ĥ_w = -Σ wᵢ ∇²log pᵢ`
//! (the `1/n` factors cancel).

use std::f64::consts::PI;

use ndarray::{Array1, Array2, ArrayView1};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{design_matrix, fit_weighted_linear};
use crate::linalg::Cholesky;
use crate::weights::{weights_and_ratios, DensityPair, WeightParams};

/// Relative size of `‖Σ wᵢ gᵢ‖` above which `θ` is rejected as not being the
/// weighted minimizer.
const STATIONARITY_TOLERANCE: f64 = 1e-6;

/// Per-sample log-likelihood with its first and second derivatives in θ.
pub trait LikelihoodModel {
    fn log_likelihood(&self, x: ArrayView1<f64>, y: f64, theta: ArrayView1<f64>) -> f64;
    fn score(&self, x: ArrayView1<f64>, y: f64, theta: ArrayView1<f64>) -> Array1<f64>;
    fn hessian(&self, x: ArrayView1<f64>, y: f64, theta: ArrayView1<f64>) -> Array2<f64>;
}

/// `y = β₀ + βᵀx + ε`, `ε ~ N(0, s)`, with `θ = [β₀, β…, s]`.
#[derive(Debug, Clone, Copy, Default)]
pub struct GaussianLinearModel;

impl GaussianLinearModel {
    fn residual(x: ArrayView1<f64>, y: f64, theta: ArrayView1<f64>) -> f64 {
        let d = x.len();
        y - theta[0] - x.dot(&theta.slice(ndarray::s![1..=d]))
    }

    /// The weighted maximum-likelihood `θ̂_w`.
    pub fn fit(data: &Dataset, weights: ArrayView1<f64>) -> Result<Array1<f64>> {
        let model = fit_weighted_linear(data, weights)?;
        let residuals = data.y() - &model.decision(data.x().view());
        let variance = weighted_variance(residuals.view(), weights);
        let mut theta = Array1::zeros(data.d() + 2);
        theta
            .slice_mut(ndarray::s![..=data.d()])
            .assign(&model.params());
        theta[data.d() + 1] = variance;
        Ok(theta)
    }
}

fn weighted_variance(residuals: ArrayView1<f64>, weights: ArrayView1<f64>) -> f64 {
    let c: f64 = weights.sum();
    residuals
        .iter()
        .zip(weights)
        .map(|(e, w)| w * e * e)
        .sum::<f64>()
        / c
}

impl LikelihoodModel for GaussianLinearModel {
    fn log_likelihood(&self, x: ArrayView1<f64>, y: f64, theta: ArrayView1<f64>) -> f64 {
        let s = theta[x.len() + 1];
        let e = Self::residual(x, y, theta);
        -0.5 * (2.0 * PI * s).ln() - e * e / (2.0 * s)
    }

    fn score(&self, x: ArrayView1<f64>, y: f64, theta: ArrayView1<f64>) -> Array1<f64> {
        let d = x.len();
        let s = theta[d + 1];
        let e = Self::residual(x, y, theta);
        let mut g = Array1::zeros(d + 2);
        g[0] = e / s;
        for j in 0..d {
            g[j + 1] = e * x[j] / s;
        }
        g[d + 1] = (e * e / s - 1.0) / (2.0 * s);
        g
    }

    fn hessian(&self, x: ArrayView1<f64>, y: f64, theta: ArrayView1<f64>) -> Array2<f64> {
        let d = x.len();
        let s = theta[d + 1];
        let e = Self::residual(x, y, theta);
        let mut xt = Array1::ones(d + 1);
        xt.slice_mut(ndarray::s![1..]).assign(&x);
        let mut h = Array2::zeros((d + 2, d + 2));
        for a in 0..=d {
            for b in 0..=d {
                h[[a, b]] = -xt[a] * xt[b] / s;
            }
            h[[a, d + 1]] = -e * xt[a] / (s * s);
            h[[d + 1, a]] = h[[a, d + 1]];
        }
        h[[d + 1, d + 1]] = 1.0 / (2.0 * s * s) - e * e / (s * s * s);
        h
    }
}

/// Logistic model `P(y | x) = 1 / (1 + exp(-y θᵀx̃))` for labels ±1.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticLikelihood;

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticLikelihood {
    fn margin(x: ArrayView1<f64>, theta: ArrayView1<f64>) -> f64 {
        theta[0] + x.dot(&theta.slice(ndarray::s![1..]))
    }
}

impl LikelihoodModel for LogisticLikelihood {
    fn log_likelihood(&self, x: ArrayView1<f64>, y: f64, theta: ArrayView1<f64>) -> f64 {
        let z = -y * Self::margin(x, theta);
        if z > 0.0 {
            -(z + (-z).exp().ln_1p())
        } else {
            -z.exp().ln_1p()
        }
    }

    fn score(&self, x: ArrayView1<f64>, y: f64, theta: ArrayView1<f64>) -> Array1<f64> {
        let c = y * sigmoid(-y * Self::margin(x, theta));
        let mut g = Array1::from_elem(x.len() + 1, c);
        for j in 0..x.len() {
            g[j + 1] *= x[j];
        }
        g
    }

    fn hessian(&self, x: ArrayView1<f64>, _y: f64, theta: ArrayView1<f64>) -> Array2<f64> {
        let f = Self::margin(x, theta);
        let s = sigmoid(f) * sigmoid(-f);
        let mut xt = Array1::ones(x.len() + 1);
        xt.slice_mut(ndarray::s![1..]).assign(&x);
        let p = xt.len();
        Array2::from_shape_fn((p, p), |(a, b)| -s * xt[a] * xt[b])
    }
}

/// Plug-in information criterion for any likelihood model at the weighted
/// minimizer `theta`.
pub fn ic_gw_general<M: LikelihoodModel + ?Sized>(
    model: &M,
    theta: ArrayView1<f64>,
    train: &Dataset,
    dp: &DensityPair,
    wp: WeightParams,
) -> Result<f64> {
    let (weights, ratios) = weights_and_ratios(dp, train.x().view(), wp)?;
    let p = theta.len();
    let mut fit_term = 0.0;
    let mut j = Array2::<f64>::zeros((p, p));
    let mut h = Array2::<f64>::zeros((p, p));
    let mut gradient = Array1::<f64>::zeros(p);
    let mut gradient_scale = 0.0;
    for (i, row) in train.x().rows().into_iter().enumerate() {
        let y = train.y()[i];
        let (w, dr) = (weights[i], ratios[i]);
        fit_term += dr * model.log_likelihood(row, y, theta);
        let g = model.score(row, y, theta);
        if g.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                actual: g.len(),
            });
        }
        gradient.scaled_add(w, &g);
        gradient_scale += w * g.dot(&g).sqrt();
        for a in 0..p {
            for b in 0..p {
                j[[a, b]] += dr * w * g[a] * g[b];
            }
        }
        h.scaled_add(-w, &model.hessian(row, y, theta));
    }
    let grad_norm = gradient.dot(&gradient).sqrt();
    if grad_norm > STATIONARITY_TOLERANCE * gradient_scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotStationary(grad_norm));
    }
    let chol = Cholesky::new(&h, 1e-14)
        .map_err(|e| Error::Singular(format!("weighted Hessian estimate ({e})")))?;
    let penalty = chol.solve_matrix(&j).diag().sum();
    Ok(-2.0 * fit_term + 2.0 * penalty)
}

/// Closed-form information criterion for weighted normal linear regression:
///
/// ```text
/// Σ drᵢ (ε̂ᵢ²/σ̂² + ln 2πσ̂²) + 2 Σ drᵢ [ (ε̂ᵢ²/σ̂²) ĥᵢ + wᵢ/(2ĉ_w) (ε̂ᵢ²/σ̂² - 1)² ]
/// ```
///
/// with `ĉ_w = Σ wᵢ`, `σ̂² = Σ wᵢ ε̂ᵢ² / ĉ_w` and `ĥᵢ` the diagonal of the
/// weighted hat matrix `X̃ (X̃ᵀWX̃)⁻¹ X̃ᵀW`.
pub fn ic_gw_linear(train: &Dataset, dp: &DensityPair, wp: WeightParams) -> Result<f64> {
    let (weights, ratios) = weights_and_ratios(dp, train.x().view(), wp)?;
    let model = fit_weighted_linear(train, weights.view())?;
    let residuals = train.y() - &model.decision(train.x().view());
    let c_w = weights.sum();
    let variance = weighted_variance(residuals.view(), weights.view());
    // residuals at rounding level count as an exact fit
    let scale = weighted_variance(train.y().view(), weights.view()).max(f64::MIN_POSITIVE);
    if !(variance > 1e-20 * scale) || !variance.is_finite() {
        return Err(Error::Domain(format!(
            "weighted residual variance is {variance}"
        )));
    }
    let design = design_matrix(train.x().view());
    let mut gram = Array2::<f64>::zeros((design.ncols(), design.ncols()));
    for (row, &w) in design.rows().into_iter().zip(&weights) {
        for a in 0..row.len() {
            for b in 0..row.len() {
                gram[[a, b]] += w * row[a] * row[b];
            }
        }
    }
    let chol = Cholesky::new(&gram, 1e-12)?;
    let log_norm = (2.0 * PI * variance).ln();
    let mut fit_term = 0.0;
    let mut penalty = 0.0;
    for (i, row) in design.rows().into_iter().enumerate() {
        let z = residuals[i] * residuals[i] / variance;
        let leverage = weights[i] * row.dot(&chol.solve(row));
        fit_term += ratios[i] * (z + log_norm);
        penalty += ratios[i] * (z * leverage + weights[i] / (2.0 * c_w) * (z - 1.0) * (z - 1.0));
    }
    Ok(fit_term + 2.0 * penalty)
}
