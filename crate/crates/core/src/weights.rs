//! The generalized importance-weight family
//!
//! ```text
//! w^{(λ,α)}(x) = m_f^{(λ,α)}(p_tr(x), p_te(x)) / p_tr(x)
//! ```
//!
//! λ = 0 is unweighted ERM, λ = 1 the full density ratio, α = 1 the
//! exponentially flattened weights `r^λ` and α = 3 the relative weights
//! `r / ((1-λ) r + λ)`.

use std::fmt;
use std::sync::Arc;

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{log_unit_interpolation, Alpha};

/// Densities below this are treated as outside the support.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Coordinates `(λ, α)` of a member of the weight family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub lambda: f64,
    pub alpha: f64,
}

impl WeightParams {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1], got {lambda}"
            )));
        }
        Alpha::new(alpha)?;
        Ok(WeightParams { lambda, alpha })
    }

    /// Unweighted ERM.
    pub fn unweighted() -> Self {
        WeightParams {
            lambda: 0.0,
            alpha: 1.0,
        }
    }

    /// Full density-ratio weighting.
    pub fn density_ratio() -> Self {
        WeightParams {
            lambda: 1.0,
            alpha: 1.0,
        }
    }

    fn alpha_coord(self) -> Alpha {
        // validated on construction; fields are public, so re-check cheaply
        Alpha::new(self.alpha).unwrap_or_else(|_| panic!("non-finite alpha {}", self.alpha))
    }

    fn validate(self) -> Result<Self> {
        WeightParams::new(self.lambda, self.alpha)
    }
}

impl fmt::Display for WeightParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(lambda={}, alpha={})", self.lambda, self.alpha)
    }
}

type DensityFn = dyn Fn(ArrayView1<f64>) -> f64 + Send + Sync;

/// Pointwise-evaluable training and test input densities.
#[derive(Clone)]
pub struct DensityPair {
    train: Arc<DensityFn>,
    test: Arc<DensityFn>,
}

impl fmt::Debug for DensityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DensityPair { .. }")
    }
}

impl DensityPair {
    pub fn new<F, G>(train: F, test: G) -> Self
    where
        F: Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static,
        G: Fn(ArrayView1<f64>) -> f64 + Send + Sync + 'static,
    {
        DensityPair {
            train: Arc::new(train),
            test: Arc::new(test),
        }
    }

    /// Both densities equal; every ratio is 1.
    pub fn identical() -> Self {
        DensityPair::new(|_| 1.0, |_| 1.0)
    }

    /// `(p_tr(x), p_te(x))`, checked against the support floor. `row` only
    /// labels the error.
    pub fn evaluate(&self, x: ArrayView1<f64>, row: usize) -> Result<(f64, f64)> {
        let p_tr = (self.train)(x);
        let p_te = (self.test)(x);
        for v in [p_tr, p_te] {
            if !(v >= DENSITY_FLOOR) || !v.is_finite() {
                return Err(Error::SupportViolation { row, value: v });
            }
        }
        Ok((p_tr, p_te))
    }

    pub fn ratio(&self, x: ArrayView1<f64>, row: usize) -> Result<f64> {
        let (p_tr, p_te) = self.evaluate(x, row)?;
        Ok(p_te / p_tr)
    }

    /// Density ratios `p_te/p_tr` for every row.
    pub fn ratios(&self, x: ArrayView2<f64>) -> Result<Array1<f64>> {
        x.rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| self.ratio(row, i))
            .collect()
    }
}

fn log_weight(log_ratio: f64, wp: WeightParams) -> f64 {
    log_unit_interpolation(log_ratio, wp.lambda, wp.alpha_coord())
}

/// `w^{(λ,α)}(x)` from the two densities.
pub fn generalized_weight(dp: &DensityPair, x: ArrayView1<f64>, wp: WeightParams) -> Result<f64> {
    let wp = wp.validate()?;
    let (p_tr, p_te) = dp.evaluate(x, 0)?;
    Ok(weight_from_densities(p_tr, p_te, wp))
}

pub(crate) fn weight_from_densities(p_tr: f64, p_te: f64, wp: WeightParams) -> f64 {
    if wp.lambda == 0.0 {
        return 1.0;
    }
    if wp.lambda == 1.0 {
        return p_te / p_tr;
    }
    log_weight(p_te.ln() - p_tr.ln(), wp).exp()
}

/// `w^{(λ,α)}` expressed through the density ratio `r = p_te/p_tr` alone.
pub fn weight_from_ratio(r: f64, wp: WeightParams) -> Result<f64> {
    let wp = wp.validate()?;
    if !(r > 0.0) || r.is_infinite() {
        return Err(Error::Domain(format!(
            "density ratio must be positive and finite, got {r}"
        )));
    }
    if wp.lambda == 0.0 {
        return Ok(1.0);
    }
    if wp.lambda == 1.0 {
        return Ok(r);
    }
    Ok(log_weight(r.ln(), wp).exp())
}

/// Weights for every row of `x`; support violations name the row.
pub fn batch_weights(
    dp: &DensityPair,
    x: ArrayView2<f64>,
    wp: WeightParams,
) -> Result<Array1<f64>> {
    let wp = wp.validate()?;
    x.rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            let (p_tr, p_te) = dp.evaluate(row, i)?;
            Ok(weight_from_densities(p_tr, p_te, wp))
        })
        .collect()
}

/// Both the weights and the full density ratios for every row.
pub(crate) fn weights_and_ratios(
    dp: &DensityPair,
    x: ArrayView2<f64>,
    wp: WeightParams,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let wp = wp.validate()?;
    let n = x.nrows();
    let mut w = Array1::zeros(n);
    let mut r = Array1::zeros(n);
    for (i, row) in x.rows().into_iter().enumerate() {
        let (p_tr, p_te) = dp.evaluate(row, i)?;
        w[i] = weight_from_densities(p_tr, p_te, wp);
        r[i] = p_te / p_tr;
    }
    Ok((w, r))
}
