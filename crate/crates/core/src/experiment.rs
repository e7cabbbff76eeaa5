//! Repeated covariate-shift trials comparing weighting methods.

use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::learners::{fit_weighted_logistic, LearnerConfig, LogisticOptions, Task};
use crate::libsvm::{binarize_labels, parse_libsvm};
use crate::selection::{
    bayes_opt, grid_search, ic_gw_general, ic_gw_linear, IwcvObjective, LogisticLikelihood,
    SearchBox, SelectionResult, Surface,
};
use crate::shift::{
    density_pair_from_spec, induce_shift, random_unit_projection, standardize_dataset,
    synth_regression,
};
use crate::weights::{batch_weights, DensityPair, WeightParams};

/// λ values tried by the oracle line search of the fixed-α baselines.
pub const LINE_SEARCH_POINTS: usize = 21;

/// Where examples come from: the synthetic regression task or a LIBSVM file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum DataSource {
    Synth,
    Libsvm(PathBuf),
}

impl From<String> for DataSource {
    fn from(s: String) -> Self {
        if s == "synth" {
            DataSource::Synth
        } else {
            DataSource::Libsvm(PathBuf::from(s))
        }
    }
}

impl From<DataSource> for String {
    fn from(d: DataSource) -> Self {
        match d {
            DataSource::Synth => "synth".into(),
            DataSource::Libsvm(p) => p.to_string_lossy().into_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Erm,
    Iwerm,
    Aiwerm,
    Riwerm,
    IgiwermBopt,
    IgiwermIc,
    IgiwermGrid,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Erm,
        Method::Iwerm,
        Method::Aiwerm,
        Method::Riwerm,
        Method::IgiwermBopt,
        Method::IgiwermIc,
        Method::IgiwermGrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Erm => "erm",
            Method::Iwerm => "iwerm",
            Method::Aiwerm => "aiwerm",
            Method::Riwerm => "riwerm",
            Method::IgiwermBopt => "igiwerm-bopt",
            Method::IgiwermIc => "igiwerm-ic",
            Method::IgiwermGrid => "igiwerm-grid",
        }
    }

    /// Whether the method picks its parameters by looking at test labels.
    pub fn uses_test_labels(self) -> bool {
        matches!(self, Method::Aiwerm | Method::Riwerm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown method `{s}`")))
    }
}

/// Everything needed to reproduce a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub methods: Vec<Method>,
    pub trials: usize,
    pub seed: u64,
    pub learner: LearnerConfig,
    pub search: SearchBox,
    pub folds: usize,
    /// Synthetic sample sizes; ignored for file sources.
    pub n_train: usize,
    pub n_test: usize,
    pub bo_init: usize,
    pub bo_iter: usize,
    pub grid_lambda: usize,
    pub grid_alpha: usize,
    /// Report CSV; the human-readable table goes next to it with `.txt`.
    pub report: Option<PathBuf>,
    /// Directory for per-trial grid surfaces.
    pub surface_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            source: DataSource::Synth,
            methods: vec![Method::Erm, Method::Iwerm],
            trials: 10,
            seed: 0,
            learner: LearnerConfig::Linear,
            search: SearchBox::default(),
            folds: 5,
            n_train: 1000,
            n_test: 300,
            bo_init: 5,
            bo_iter: 20,
            grid_lambda: 11,
            grid_alpha: 11,
            report: None,
            surface_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no methods selected".into());
        }
        if let DataSource::Libsvm(p) = &self.source {
            if !p.is_file() {
                return bad(format!("dataset {} does not exist", p.display()));
            }
        }
        if self.folds < 2 {
            return bad(format!("folds must be at least 2, got {}", self.folds));
        }
        if self.bo_init < 2 {
            return bad(format!("bo_init must be at least 2, got {}", self.bo_init));
        }
        if self.grid_lambda < 2 || self.grid_alpha < 2 {
            return bad("grid needs at least 2 nodes per axis".into());
        }
        if self.source == DataSource::Synth && (self.n_train == 0 || self.n_test == 0) {
            return bad("synthetic sample sizes must be positive".into());
        }
        self.search
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn task(&self) -> Task {
        match self.source {
            DataSource::Synth => Task::Regression,
            DataSource::Libsvm(_) => Task::Classification,
        }
    }

    /// Seed of trial `t`.
    pub fn trial_seed(&self, t: usize) -> u64 {
        self.seed.wrapping_add(t as u64)
    }
}

/// Outcome of one method on one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub method: Method,
    pub trial: usize,
    pub seed: u64,
    /// Selected or fixed weighting parameters.
    pub params: Option<WeightParams>,
    /// Test metric; `None` when the trial failed.
    pub metric: Option<f64>,
    pub error: Option<String>,
    pub uses_test_labels: bool,
    pub seconds: f64,
    #[serde(skip)]
    pub surface: Option<Surface>,
}

impl TrialReport {
    pub fn failed(&self) -> bool {
        self.metric.is_none()
    }
}

/// One trial's shifted split.
#[derive(Debug, Clone)]
pub struct TrialData {
    pub train: Dataset,
    pub test: Dataset,
    pub densities: DensityPair,
    pub task: Task,
    /// Seed for the model-selection stage.
    pub selection_seed: u64,
}

/// Load the pool for a file source: labels mapped to ±1, features
/// standardized once. Synthetic sources have no pool and return `None`.
pub fn load_pool(source: &DataSource) -> Result<Option<Dataset>> {
    match source {
        DataSource::Synth => Ok(None),
        DataSource::Libsvm(path) => Ok(Some(load_libsvm(path)?)),
    }
}

pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let data = binarize_labels(&parse_libsvm(BufReader::new(file))?)?;
    standardize_dataset(&data)
}

/// Draw the split for trial `t`.
pub fn prepare_trial(
    config: &ExperimentConfig,
    pool: Option<&Dataset>,
    t: usize,
) -> Result<TrialData> {
    let seed = config.trial_seed(t);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match pool {
        None => {
            let task = synth_regression(config.n_train, config.n_test, seed)?;
            Ok(TrialData {
                train: task.train,
                test: task.test,
                densities: task.densities,
                task: Task::Regression,
                selection_seed: rng.random(),
            })
        }
        Some(pool) => {
            let projection = random_unit_projection(pool.d(), &mut rng);
            let split = induce_shift(pool, projection.view(), rng.random())?;
            Ok(TrialData {
                densities: density_pair_from_spec(&split.spec),
                train: split.train,
                test: split.test,
                task: Task::Classification,
                selection_seed: rng.random(),
            })
        }
    }
}

/// Train with `wp` and score on the test split.
pub fn test_metric(data: &TrialData, learner: LearnerConfig, wp: WeightParams) -> Result<f64> {
    let weights = batch_weights(&data.densities, data.train.x().view(), wp)?;
    let model = learner.fit(&data.train, weights.view())?;
    let pred = model.predict(data.test.x().view());
    data.task.metric(pred.view(), data.test.y().view())
}

/// Importance-weighted cross-validation objective over the training split.
pub fn iwcv_objective(config: &ExperimentConfig, data: &TrialData) -> Result<IwcvObjective> {
    IwcvObjective::new(
        &data.train,
        &data.densities,
        config.learner,
        data.task,
        config.folds,
        data.selection_seed,
    )
}

/// Information criterion of the weighted fit at `wp`, for the linear and
/// logistic learners.
pub fn information_criterion(
    learner: LearnerConfig,
    data: &TrialData,
    wp: WeightParams,
) -> Result<f64> {
    match learner {
        LearnerConfig::Linear => ic_gw_linear(&data.train, &data.densities, wp),
        LearnerConfig::Logistic { tol, max_iter } => {
            let weights = batch_weights(&data.densities, data.train.x().view(), wp)?;
            let w = weights.mapv(|v| v / weights.mean().unwrap_or(1.0));
            let model =
                fit_weighted_logistic(&data.train, w.view(), LogisticOptions { tol, max_iter })?;
            ic_gw_general(
                &LogisticLikelihood,
                model.params().view(),
                &data.train,
                &data.densities,
                wp,
            )
        }
        LearnerConfig::KernelRidge { .. } => Err(Error::Config(
            "the information criterion needs a parametric likelihood (linear or logistic learner)"
                .into(),
        )),
    }
}

/// Grid argmin of the information criterion; returns the result and surface.
pub fn ic_grid(config: &ExperimentConfig, data: &TrialData) -> Result<(SelectionResult, Surface)> {
    grid_search(
        |wp| information_criterion(config.learner, data, wp),
        config.search,
        config.grid_lambda,
        config.grid_alpha,
    )
}

fn line_search(
    config: &ExperimentConfig,
    data: &TrialData,
    alpha: f64,
) -> Result<(WeightParams, f64)> {
    let mut best: Option<(WeightParams, f64)> = None;
    for k in 0..LINE_SEARCH_POINTS {
        let lambda = k as f64 / (LINE_SEARCH_POINTS - 1) as f64;
        let wp = WeightParams::new(lambda, alpha)?;
        if let Ok(m) = test_metric(data, config.learner, wp) {
            if m.is_finite() && best.is_none_or(|(_, b)| m < b) {
                best = Some((wp, m));
            }
        }
    }
    best.ok_or(Error::NoFiniteEvaluation)
}

fn run_method(
    config: &ExperimentConfig,
    data: &TrialData,
    method: Method,
) -> Result<(WeightParams, f64, Option<Surface>)> {
    let fixed = |wp: WeightParams| -> Result<(WeightParams, f64, Option<Surface>)> {
        Ok((wp, test_metric(data, config.learner, wp)?, None))
    };
    match method {
        Method::Erm => fixed(WeightParams::unweighted()),
        Method::Iwerm => fixed(WeightParams::density_ratio()),
        Method::Aiwerm => line_search(config, data, 1.0).map(|(wp, m)| (wp, m, None)),
        Method::Riwerm => line_search(config, data, 3.0).map(|(wp, m)| (wp, m, None)),
        Method::IgiwermBopt => {
            let objective = iwcv_objective(config, data)?;
            let sel = bayes_opt(
                |wp| objective.evaluate(wp),
                config.search,
                config.bo_init,
                config.bo_iter,
                data.selection_seed,
            )?;
            fixed(sel.best_params)
        }
        Method::IgiwermIc => {
            let (sel, surface) = ic_grid(config, data)?;
            let (wp, m, _) = fixed(sel.best_params)?;
            Ok((wp, m, Some(surface)))
        }
        Method::IgiwermGrid => {
            let objective = iwcv_objective(config, data)?;
            let (sel, surface) = grid_search(
                |wp| objective.evaluate(wp),
                config.search,
                config.grid_lambda,
                config.grid_alpha,
            )?;
            let (wp, m, _) = fixed(sel.best_params)?;
            Ok((wp, m, Some(surface)))
        }
    }
}

fn run_trial(config: &ExperimentConfig, pool: Option<&Dataset>, t: usize) -> Vec<TrialReport> {
    let seed = config.trial_seed(t);
    let data = prepare_trial(config, pool, t);
    config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = data
                .as_ref()
                .map_err(Clone::clone)
                .and_then(|d| run_method(config, d, method));
            let seconds = start.elapsed().as_secs_f64();
            let base = TrialReport {
                method,
                trial: t,
                seed,
                params: None,
                metric: None,
                error: None,
                uses_test_labels: method.uses_test_labels(),
                seconds,
                surface: None,
            };
            match outcome {
                Ok((wp, m, surface)) if m.is_finite() => TrialReport {
                    params: Some(wp),
                    metric: Some(m),
                    surface,
                    ..base
                },
                Ok((wp, m, _)) => TrialReport {
                    params: Some(wp),
                    error: Some(format!("non-finite metric {m}")),
                    ..base
                },
                Err(e) => TrialReport {
                    error: Some(e.to_string()),
                    ..base
                },
            }
        })
        .collect()
}

/// Run every trial (in parallel) and every method. Reports are ordered by
/// trial, then by the configured method order. Per-trial failures are
/// recorded in the reports rather than returned.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialReport>> {
    config.validate()?;
    let pool = load_pool(&config.source)?;
    let reports: Vec<Vec<TrialReport>> = (0..config.trials)
        .into_par_iter()
        .map(|t| run_trial(config, pool.as_ref(), t))
        .collect();
    Ok(reports.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_synth(methods: Vec<Method>) -> ExperimentConfig {
        ExperimentConfig {
            methods,
            trials: 2,
            n_train: 200,
            n_test: 60,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn erm_smoke() {
        let cfg = ExperimentConfig {
            trials: 1,
            ..small_synth(vec![Method::Erm])
        };
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.len(), 1);
        assert!(r[0].metric.unwrap().is_finite());
        assert_eq!(r[0].params, Some(WeightParams::unweighted()));
    }

    #[test]
    fn reports_ordered_and_deterministic() {
        let cfg = small_synth(vec![Method::Iwerm, Method::Erm, Method::Aiwerm]);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let order: Vec<(usize, Method)> = a.iter().map(|r| (r.trial, r.method)).collect();
        assert_eq!(
            order[..3],
            [(0, Method::Iwerm), (0, Method::Erm), (0, Method::Aiwerm)]
        );
        assert_eq!(order[3].0, 1);
        let strip = |v: &[TrialReport]| v.iter().map(|r| (r.metric, r.params)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        assert!(a
            .iter()
            .filter(|r| r.method == Method::Aiwerm)
            .all(|r| r.uses_test_labels));
    }

    #[test]
    fn oracle_line_search_beats_endpoints() {
        let cfg = small_synth(vec![Method::Erm, Method::Iwerm, Method::Aiwerm]);
        let r = run_experiment(&cfg).unwrap();
        for t in 0..2 {
            let get = |m| {
                r.iter()
                    .find(|x| x.trial == t && x.method == m)
                    .unwrap()
                    .metric
                    .unwrap()
            };
            assert!(get(Method::Aiwerm) <= get(Method::Erm).min(get(Method::Iwerm)));
        }
    }

    #[test]
    fn kernel_ic_fails_per_trial() {
        let cfg = ExperimentConfig {
            learner: LearnerConfig::kernel_ridge(),
            trials: 1,
            ..small_synth(vec![Method::IgiwermIc, Method::Erm])
        };
        let r = run_experiment(&cfg).unwrap();
        assert!(r[0].failed());
        assert!(!r[1].failed());
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig {
            trials: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(ExperimentConfig {
            methods: vec![],
            ..Default::default()
        }
        .validate()
        .is_err());
        let missing = ExperimentConfig {
            source: DataSource::Libsvm("/nonexistent/file".into()),
            ..Default::default()
        };
        assert!(matches!(missing.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("svm".parse::<Method>().is_err());
    }
}
