//! Choosing `(λ, α)`: importance-weighted cross-validation, the weighted
//! information criterion, Gaussian-process Bayesian optimization and grid
//! search.

mod bayes;
mod criterion;
mod gp;
mod grid;
mod iwcv;

pub use bayes::{bayes_opt, initial_design, ACQUISITION_GRID, REFINED_CANDIDATES};
pub use criterion::{
    ic_gw_general, ic_gw_linear, GaussianLinearModel, LikelihoodModel, LogisticLikelihood,
};
pub use gp::{
    expected_improvement, gp_posterior, gp_update, improvement_from_moments, GpState, SeKernel,
};
pub use grid::{grid_search, Surface};
pub use iwcv::{iwcv_loss, IwcvObjective};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::WeightParams;

/// Rectangle of candidate `(λ, α)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lambda_range: (f64, f64),
    pub alpha_range: (f64, f64),
}

impl Default for SearchBox {
    fn default() -> Self {
        SearchBox {
            lambda_range: (0.0, 1.0),
            alpha_range: (-1.0, 3.0),
        }
    }
}

impl SearchBox {
    pub fn new(lambda_range: (f64, f64), alpha_range: (f64, f64)) -> Result<Self> {
        let b = SearchBox {
            lambda_range,
            alpha_range,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let (l0, l1) = self.lambda_range;
        let (a0, a1) = self.alpha_range;
        if !(0.0 <= l0 && l0 < l1 && l1 <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda range ({l0}, {l1}) must be a nondegenerate subset of [0, 1]"
            )));
        }
        if !(a0.is_finite() && a1.is_finite() && a0 < a1) {
            return Err(Error::InvalidParameter(format!(
                "alpha range ({a0}, {a1}) is degenerate"
            )));
        }
        Ok(())
    }

    /// Map unit-square coordinates onto the box.
    pub fn denormalize(&self, u: [f64; 2]) -> WeightParams {
        let (l0, l1) = self.lambda_range;
        let (a0, a1) = self.alpha_range;
        WeightParams {
            lambda: (l0 + u[0] * (l1 - l0)).clamp(l0, l1),
            alpha: (a0 + u[1] * (a1 - a0)).clamp(a0, a1),
        }
    }

    pub fn normalize(&self, wp: WeightParams) -> [f64; 2] {
        let (l0, l1) = self.lambda_range;
        let (a0, a1) = self.alpha_range;
        [(wp.lambda - l0) / (l1 - l0), (wp.alpha - a0) / (a1 - a0)]
    }
}

/// One objective evaluation; failed evaluations carry `+∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub lambda: f64,
    pub alpha: f64,
    pub loss: f64,
}

impl Evaluation {
    pub fn params(&self) -> WeightParams {
        WeightParams {
            lambda: self.lambda,
            alpha: self.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub best_params: WeightParams,
    pub best_loss: f64,
    pub history: Vec<Evaluation>,
    pub evaluations: usize,
}

impl SelectionResult {
    /// Best finite entry of `history`; earlier entries win ties.
    pub(crate) fn from_history(history: Vec<Evaluation>) -> Result<Self> {
        let mut best: Option<Evaluation> = None;
        for e in &history {
            if e.loss.is_finite() && best.is_none_or(|b| e.loss < b.loss) {
                best = Some(*e);
            }
        }
        let best = best.ok_or(Error::NoFiniteEvaluation)?;
        Ok(SelectionResult {
            best_params: best.params(),
            best_loss: best.loss,
            evaluations: history.len(),
            history,
        })
    }
}

/// Run an objective and turn failures (or non-finite values) into `+∞`.
pub(crate) fn guarded<F>(objective: F, wp: WeightParams) -> f64
where
    F: FnOnce(WeightParams) -> Result<f64>,
{
    match objective(wp) {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}
