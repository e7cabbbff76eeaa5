use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};

/// Where a dataset came from, kept alongside the numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub seed: Option<u64>,
    /// Per-column (mean, std) used to standardize the features, if any.
    pub standardization: Option<(Array1<f64>, Array1<f64>)>,
}

/// Dense features with one target per row.
///
/// Regression targets are arbitrary reals; classification targets are ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Array2<f64>,
    y: Array1<f64>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidParameter("dataset has no rows".into()));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: x.nrows(),
                actual: y.len(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "dataset contains non-finite entries".into(),
            ));
        }
        Ok(Dataset {
            x,
            y,
            provenance: Provenance::default(),
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn x(&self) -> &Array2<f64> {
        &self.x
    }

    pub fn y(&self) -> &Array1<f64> {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), indices),
            y: self.y.select(Axis(0), indices),
            provenance: self.provenance.clone(),
        }
    }

    /// Fails unless every target is -1 or +1.
    pub fn check_binary(&self) -> Result<()> {
        match self.y.iter().position(|&v| v != 1.0 && v != -1.0) {
            Some(i) => Err(Error::InvalidParameter(format!(
                "row {i} has label {} where ±1 is required",
                self.y[i]
            ))),
            None => Ok(()),
        }
    }

    pub fn has_both_classes(&self) -> bool {
        self.y.iter().any(|&v| v > 0.0) && self.y.iter().any(|&v| v < 0.0)
    }
}
