use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{guarded, Evaluation, SearchBox, SelectionResult};
use crate::error::{Error, Result};
use crate::weights::WeightParams;

/// Losses over a rectangular `(λ, α)` grid; `losses[[i, j]]` belongs to
/// `(lambdas[i], alphas[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Surface {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub losses: Array2<f64>,
}

impl Surface {
    pub fn new(lambdas: Vec<f64>, alphas: Vec<f64>, losses: Array2<f64>) -> Result<Self> {
        if losses.dim() != (lambdas.len(), alphas.len()) {
            return Err(Error::DimensionMismatch {
                expected: lambdas.len() * alphas.len(),
                actual: losses.len(),
            });
        }
        Ok(Surface {
            lambdas,
            alphas,
            losses,
        })
    }

    /// Grid argmin; ties go to the smaller λ, then the smaller α.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for ((i, j), &l) in self.losses.indexed_iter() {
            if l.is_finite() && best.is_none_or(|b| l < self.losses[b]) {
                best = Some((i, j));
            }
        }
        best
    }
}

fn linspace(range: (f64, f64), n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            if k + 1 == n {
                range.1
            } else {
                range.0 + (range.1 - range.0) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Evaluate `objective` at every node of an `n_lambda × n_alpha` grid
/// spanning `search`, in parallel.
pub fn grid_search<F>(
    objective: F,
    search: SearchBox,
    n_lambda: usize,
    n_alpha: usize,
) -> Result<(SelectionResult, Surface)>
where
    F: Fn(WeightParams) -> Result<f64> + Sync,
{
    search.validate()?;
    if n_lambda < 2 || n_alpha < 2 {
        return Err(Error::InvalidParameter(format!(
            "grid needs at least 2 nodes per axis, got {n_lambda}x{n_alpha}"
        )));
    }
    let lambdas = linspace(search.lambda_range, n_lambda);
    let alphas = linspace(search.alpha_range, n_alpha);
    let cells: Vec<f64> = (0..n_lambda * n_alpha)
        .into_par_iter()
        .map(|k| {
            guarded(
                &objective,
                WeightParams {
                    lambda: lambdas[k / n_alpha],
                    alpha: alphas[k % n_alpha],
                },
            )
        })
        .collect();
    let losses =
        Array2::from_shape_vec((n_lambda, n_alpha), cells).expect("cell count matches grid");
    let history: Vec<Evaluation> = losses
        .indexed_iter()
        .map(|((i, j), &loss)| Evaluation {
            lambda: lambdas[i],
            alpha: alphas[j],
            loss,
        })
        .collect();
    let result = SelectionResult::from_history(history)?;
    Ok((
        result,
        Surface {
            lambdas,
            alphas,
            losses,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn two_by_two_counts() {
        let calls = AtomicUsize::new(0);
        let (r, s) = grid_search(
            |wp| {
                calls.fetch_add(1, Ordering::SeqCst);
                Ok(wp.lambda + wp.alpha)
            },
            SearchBox::default(),
            2,
            2,
        )
        .unwrap();
        assert_eq!(calls.into_inner(), 4);
        assert_eq!(r.evaluations, 4);
        assert_eq!(s.losses.dim(), (2, 2));
        assert_eq!((r.best_params.lambda, r.best_params.alpha), (0.0, -1.0));
    }

    #[test]
    fn ties_prefer_small_lambda_then_alpha() {
        let (r, _) = grid_search(|_| Ok(1.0), SearchBox::default(), 3, 4).unwrap();
        assert_eq!((r.best_params.lambda, r.best_params.alpha), (0.0, -1.0));
        let (r, _) = grid_search(
            |wp| Ok(if wp.lambda > 0.2 { 0.0 } else { 1.0 }),
            SearchBox::default(),
            3,
            4,
        )
        .unwrap();
        assert_eq!((r.best_params.lambda, r.best_params.alpha), (0.5, -1.0));
    }

    #[test]
    fn endpoints_exact_and_failures_infinite() {
        let (_, s) = grid_search(
            |wp| {
                if wp.alpha > 2.0 {
                    Err(Error::Domain("x".into()))
                } else {
                    Ok(wp.alpha)
                }
            },
            SearchBox::default(),
            11,
            5,
        )
        .unwrap();
        assert_eq!(s.lambdas[10], 1.0);
        assert_eq!(s.alphas, vec![-1.0, 0.0, 1.0, 2.0, 3.0]);
        assert!(s.losses.column(4).iter().all(|l| l.is_infinite()));
    }

    #[test]
    fn rejects_small_grid() {
        assert!(grid_search(|_| Ok(0.0), SearchBox::default(), 1, 3).is_err());
    }
}
