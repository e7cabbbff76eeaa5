use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{LearnerConfig, Task};
use crate::weights::{weight_from_densities, DensityPair, WeightParams};

/// Importance-weighted cross-validation loss as a function of `(λ, α)`.
///
/// Densities and fold assignment are computed once, so repeated evaluations
/// at different parameters share the same folds.
#[derive(Debug, Clone)]
pub struct IwcvObjective {
    train: Dataset,
    p_train: Array1<f64>,
    p_test: Array1<f64>,
    folds: Vec<Vec<usize>>,
    learner: LearnerConfig,
    task: Task,
}

impl IwcvObjective {
    pub fn new(
        train: &Dataset,
        dp: &DensityPair,
        learner: LearnerConfig,
        task: Task,
        folds: usize,
        seed: u64,
    ) -> Result<Self> {
        if folds < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 folds, got {folds}"
            )));
        }
        if train.n() < folds {
            return Err(Error::InvalidParameter(format!(
                "{} rows cannot fill {folds} folds",
                train.n()
            )));
        }
        if task == Task::Classification {
            train.check_binary()?;
        }
        let n = train.n();
        let mut p_train = Array1::zeros(n);
        let mut p_test = Array1::zeros(n);
        for (i, row) in train.x().rows().into_iter().enumerate() {
            let (a, b) = dp.evaluate(row, i)?;
            p_train[i] = a;
            p_test[i] = b;
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut assignment = vec![Vec::new(); folds];
        for (pos, &i) in order.iter().enumerate() {
            assignment[pos % folds].push(i);
        }
        for f in &mut assignment {
            f.sort_unstable();
        }
        Ok(IwcvObjective {
            train: train.clone(),
            p_train,
            p_test,
            folds: assignment,
            learner,
            task,
        })
    }

    pub fn folds(&self) -> &[Vec<usize>] {
        &self.folds
    }

    /// Mean over folds of `(1/n_val) Σ (p_te/p_tr)(x) · ℓ(h(x), y)`, with `h`
    /// trained on the other folds under `w^{(λ,α)}`.
    pub fn evaluate(&self, wp: WeightParams) -> Result<f64> {
        let wp = WeightParams::new(wp.lambda, wp.alpha)?;
        let n = self.train.n();
        let mut total = 0.0;
        for (k, val) in self.folds.iter().enumerate() {
            let mut in_val = vec![false; n];
            for &i in val {
                in_val[i] = true;
            }
            let fit_rows: Vec<usize> = (0..n).filter(|&i| !in_val[i]).collect();
            let fit_data = self.train.select(&fit_rows);
            if self.task == Task::Classification && !fit_data.has_both_classes() {
                return Err(Error::SingleClassFold { fold: k });
            }
            let weights: Array1<f64> = fit_rows
                .iter()
                .map(|&i| weight_from_densities(self.p_train[i], self.p_test[i], wp))
                .collect();
            let model = self.learner.fit(&fit_data, weights.view())?;
            let val_data = self.train.select(val);
            let pred = model.predict(val_data.x().view());
            let loss: f64 = val
                .iter()
                .zip(pred.iter().zip(val_data.y()))
                .map(|(&i, (&p, &y))| {
                    self.p_test[i] / self.p_train[i] * self.task.sample_loss(p, y)
                })
                .sum();
            total += loss / val.len() as f64;
        }
        Ok(total / self.folds.len() as f64)
    }
}

/// One-shot importance-weighted cross-validation loss.
pub fn iwcv_loss(
    train: &Dataset,
    dp: &DensityPair,
    wp: WeightParams,
    learner: LearnerConfig,
    task: Task,
    folds: usize,
    seed: u64,
) -> Result<f64> {
    IwcvObjective::new(train, dp, learner, task, folds, seed)?.evaluate(wp)
}
