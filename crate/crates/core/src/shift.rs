//! Covariate-shift construction.
//!
//! Benchmark data are Z-scored and then split by a random projection: a row
//! goes to the training split with probability `sigmoid(v)`, where
//! `v = gain · wᵀx / σ` and σ is the spread of `wᵀx` over the pool. The two
//! sigmoids then serve as the known densities `p_tr`, `p_te`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::{Dataset, Provenance};
use crate::error::{Error, Result};
use crate::weights::DensityPair;

/// Default multiplier on the standardized projection.
pub const DEFAULT_GAIN: f64 = 16.0;

/// Column standardization statistics (population convention).
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Standardizer {
    pub fn fit(x: ArrayView2<f64>) -> Result<Self> {
        let n = x.nrows();
        if n == 0 {
            return Err(Error::InvalidParameter(
                "cannot standardize an empty matrix".into(),
            ));
        }
        let mean = x.mean_axis(Axis(0)).expect("nonempty");
        let std = x.std_axis(Axis(0), 0.0);
        for (j, (&m, &s)) in mean.iter().zip(std.iter()).enumerate() {
            if !(s > 1e-12 * m.abs().max(1.0)) {
                return Err(Error::ZeroVariance { column: j });
            }
        }
        Ok(Standardizer { mean, std })
    }

    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        (&x - &self.mean) / &self.std
    }

    pub fn invert(&self, z: ArrayView2<f64>) -> Array2<f64> {
        &z * &self.std + &self.mean
    }
}

/// Z-score every column; returns the standardized matrix with its column
/// means and (population) standard deviations.
pub fn zscore_standardize(x: ArrayView2<f64>) -> Result<(Array2<f64>, Array1<f64>, Array1<f64>)> {
    let s = Standardizer::fit(x)?;
    Ok((s.apply(x), s.mean, s.std))
}

/// Standardize a dataset's features, recording the statistics.
pub fn standardize_dataset(data: &Dataset) -> Result<Dataset> {
    let (z, mean, std) = zscore_standardize(data.x().view())?;
    let provenance = Provenance {
        seed: data.provenance.seed,
        standardization: Some((mean, std)),
    };
    Ok(Dataset::new(z, data.y().clone())?.with_provenance(provenance))
}

fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Parameters of a projection-sigmoid shift.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec {
    pub projection: Array1<f64>,
    pub scale_sigma: f64,
    pub gain: f64,
}

impl ShiftSpec {
    pub fn new(projection: Array1<f64>, scale_sigma: f64, gain: f64) -> Result<Self> {
        if !projection.iter().any(|&w| w != 0.0) || projection.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "projection must be finite and nonzero".into(),
            ));
        }
        if !(scale_sigma > 0.0) || !scale_sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "scale sigma must be positive, got {scale_sigma}"
            )));
        }
        if !gain.is_finite() {
            return Err(Error::InvalidParameter("gain must be finite".into()));
        }
        Ok(ShiftSpec {
            projection,
            scale_sigma,
            gain,
        })
    }

    /// The logit `v = gain · wᵀx / σ`.
    pub fn logit(&self, x: ArrayView1<f64>) -> f64 {
        self.gain * self.projection.dot(&x) / self.scale_sigma
    }

    /// Probability that `x` lands in the training split.
    pub fn train_probability(&self, x: ArrayView1<f64>) -> f64 {
        sigmoid(self.logit(x))
    }
}

/// A shifted train/test split of one pool of examples.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: Dataset,
    pub test: Dataset,
    pub spec: ShiftSpec,
    pub seed: u64,
    /// Pool row indices that went to each side.
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// A projection drawn uniformly from the unit sphere in `d` dimensions.
pub fn random_unit_projection<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Array1<f64> {
    loop {
        let w: Array1<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = w.dot(&w).sqrt();
        if norm > 1e-12 {
            return w / norm;
        }
    }
}

/// Split `data` by the projection-sigmoid protocol with gain `gain`.
pub fn induce_shift_with_gain(
    data: &Dataset,
    projection: ArrayView1<f64>,
    seed: u64,
    gain: f64,
) -> Result<SplitDataset> {
    if projection.len() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            actual: projection.len(),
        });
    }
    let scores = data.x().dot(&projection);
    let spread = scores.std(0.0);
    let mean_abs = scores.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(spread > 1e-12 * mean_abs.max(1.0)) {
        return Err(Error::DegenerateProjection);
    }
    let spec = ShiftSpec::new(projection.to_owned(), spread, gain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train_rows = Vec::new();
    let mut test_rows = Vec::new();
    for (i, &s) in scores.iter().enumerate() {
        let p = sigmoid(gain * s / spread);
        if rng.random::<f64>() < p {
            train_rows.push(i);
        } else {
            test_rows.push(i);
        }
    }
    if train_rows.is_empty() {
        return Err(Error::EmptySplit("training"));
    }
    if test_rows.is_empty() {
        return Err(Error::EmptySplit("test"));
    }
    Ok(SplitDataset {
        train: data.select(&train_rows),
        test: data.select(&test_rows),
        spec,
        seed,
        train_rows,
        test_rows,
    })
}

/// [`induce_shift_with_gain`] with the default gain of 16.
pub fn induce_shift(
    data: &Dataset,
    projection: ArrayView1<f64>,
    seed: u64,
) -> Result<SplitDataset> {
    induce_shift_with_gain(data, projection, seed, DEFAULT_GAIN)
}

/// `p_tr = sigmoid(v)`, `p_te = sigmoid(-v)`: the assignment probabilities
/// themselves, used unnormalized.
pub fn density_pair_from_spec(spec: &ShiftSpec) -> DensityPair {
    let a = spec.clone();
    let b = spec.clone();
    DensityPair::new(move |x| sigmoid(a.logit(x)), move |x| sigmoid(-b.logit(x)))
}

/// Density of Normal(mean, variance) at `x`.
pub fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let z = x - mean;
    (-z * z / (2.0 * variance)).exp() / (2.0 * std::f64::consts::PI * variance).sqrt()
}

/// Parameters of the one-dimensional quadratic regression task.
/// `Normal(a, b)` means mean `a`, variance `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub train_mean: f64,
    pub train_variance: f64,
    pub test_mean: f64,
    pub test_variance: f64,
    pub noise_variance: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_mean: 0.0,
            train_variance: 5.0,
            test_mean: -5.0,
            test_variance: 0.5,
            noise_variance: 5.0,
        }
    }
}

/// Training split, test split and the closed-form densities of a synthetic
/// task.
#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub train: Dataset,
    pub test: Dataset,
    pub densities: DensityPair,
}

/// `y = x² + ε`, `ε ~ Normal(0, 5)`, with `x_tr ~ Normal(0, 5)` and
/// `x_te ~ Normal(-5, 0.5)`.
pub fn synth_regression(n_train: usize, n_test: usize, seed: u64) -> Result<SyntheticTask> {
    synth_regression_with(n_train, n_test, seed, SynthConfig::default())
}

pub fn synth_regression_with(
    n_train: usize,
    n_test: usize,
    seed: u64,
    cfg: SynthConfig,
) -> Result<SyntheticTask> {
    if n_train == 0 || n_test == 0 {
        return Err(Error::InvalidParameter(
            "sample sizes must be positive".into(),
        ));
    }
    let dist = |mean: f64, var: f64| {
        Normal::new(mean, var.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))
    };
    let train_x = dist(cfg.train_mean, cfg.train_variance)?;
    let test_x = dist(cfg.test_mean, cfg.test_variance)?;
    let noise = dist(0.0, cfg.noise_variance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n: usize, xs: &Normal<f64>| -> Result<Dataset> {
        let x: Array1<f64> = (0..n).map(|_| xs.sample(&mut rng)).collect();
        let y: Array1<f64> = x.iter().map(|&v| v * v + noise.sample(&mut rng)).collect();
        let x = x.insert_axis(Axis(1));
        Ok(Dataset::new(x, y)?.with_provenance(Provenance {
            seed: Some(seed),
            standardization: None,
        }))
    };
    let train = draw(n_train, &train_x)?;
    let test = draw(n_test, &test_x)?;
    let densities = DensityPair::new(
        move |x| normal_pdf(x[0], cfg.train_mean, cfg.train_variance),
        move |x| normal_pdf(x[0], cfg.test_mean, cfg.test_variance),
    );
    Ok(SyntheticTask {
        train,
        test,
        densities,
    })
}
