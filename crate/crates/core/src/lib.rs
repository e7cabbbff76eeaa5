//! Importance-weighted empirical risk minimization under covariate shift,
//! with weights drawn from the α-geodesic family between the training and
//! test densities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod learners;
pub mod libsvm;
pub mod linalg;
pub mod report;
pub mod selection;
pub mod shift;
pub mod weights;

pub use dataset::{Dataset, Provenance};
pub use error::{Error, Result};
pub use weights::{DensityPair, WeightParams};
