//! Weighted empirical risk minimizers and evaluation metrics.

mod kernel;
mod linear;
mod logistic;

pub use kernel::{
    fit_weighted_kernel_ridge, gram_matrix, median_heuristic, rbf, KernelModel, KernelOptions,
    MIN_WEIGHT,
};
pub use linear::{design_matrix, fit_weighted_linear, LinearModel};
pub use logistic::{
    fit_weighted_logistic, logistic_gradient, logistic_objective, LogisticOptions, SEPARATION_NORM,
};

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Which learner to fit, with its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LearnerConfig {
    Linear,
    Logistic {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_iter")]
        max_iter: usize,
    },
    KernelRidge {
        #[serde(default)]
        bandwidth: Option<f64>,
        #[serde(default)]
        ridge: Option<f64>,
    },
}

fn default_tol() -> f64 {
    LogisticOptions::default().tol
}

fn default_max_iter() -> usize {
    LogisticOptions::default().max_iter
}

impl LearnerConfig {
    pub fn kernel_ridge() -> Self {
        LearnerConfig::KernelRidge {
            bandwidth: None,
            ridge: None,
        }
    }

    pub fn logistic() -> Self {
        LearnerConfig::Logistic {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }

    /// Fit with `weights` rescaled to mean one.
    ///
    /// The rescaling leaves the linear and logistic minimizers unchanged and
    /// pins the effective kernel-ridge regularization across weightings.
    pub fn fit(&self, data: &Dataset, weights: ArrayView1<f64>) -> Result<FittedModel> {
        let mean = weights.sum() / weights.len().max(1) as f64;
        if !(mean > 0.0) || !mean.is_finite() {
            return Err(Error::InvalidParameter(format!("weights have mean {mean}")));
        }
        let w = weights.mapv(|v| v / mean);
        Ok(match *self {
            LearnerConfig::Linear => FittedModel::Linear(fit_weighted_linear(data, w.view())?),
            LearnerConfig::Logistic { tol, max_iter } => FittedModel::Linear(
                fit_weighted_logistic(data, w.view(), LogisticOptions { tol, max_iter })?,
            ),
            LearnerConfig::KernelRidge { bandwidth, ridge } => FittedModel::Kernel(
                fit_weighted_kernel_ridge(data, w.view(), KernelOptions { bandwidth, ridge })?,
            ),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    Linear(LinearModel),
    Kernel(KernelModel),
}

impl FittedModel {
    /// Real-valued outputs; classifiers predict `sign` of these.
    pub fn predict(&self, x: ArrayView2<f64>) -> Array1<f64> {
        match self {
            FittedModel::Linear(m) => m.decision(x),
            FittedModel::Kernel(m) => m.decision(x),
        }
    }
}

/// Regression (squared loss) or binary classification (0-1 loss).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Regression,
    Classification,
}

impl Task {
    pub fn sample_loss(self, pred: f64, y: f64) -> f64 {
        match self {
            Task::Regression => (pred - y) * (pred - y),
            Task::Classification => {
                if predicted_label(pred) == y {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Mean squared error or misclassification rate.
    pub fn metric(self, pred: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
        match self {
            Task::Regression => mse(pred, y),
            Task::Classification => misclassification_rate(pred, y),
        }
    }
}

/// `+1` for nonnegative scores, `-1` otherwise.
pub fn predicted_label(score: f64) -> f64 {
    if score >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn check_lengths(pred: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<()> {
    if pred.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: y.len(),
            actual: pred.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::InvalidParameter("no predictions to score".into()));
    }
    Ok(())
}

pub fn mse(pred: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
    check_lengths(pred, y)?;
    Ok(pred
        .iter()
        .zip(y)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / y.len() as f64)
}

pub fn misclassification_rate(pred: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
    check_lengths(pred, y)?;
    let wrong = pred
        .iter()
        .zip(y)
        .filter(|(p, t)| predicted_label(**p) != predicted_label(**t))
        .count();
    Ok(wrong as f64 / y.len() as f64)
}
