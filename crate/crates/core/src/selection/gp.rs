//! Gaussian-process surrogate on the unit square and the expected-improvement
//! acquisition for minimization.

use ndarray::{Array1, Array2};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::linalg::Cholesky;

/// Squared-exponential kernel with per-dimension length-scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeKernel {
    pub length_scales: [f64; 2],
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl SeKernel {
    /// Length-scale 0.2, signal variance = variance of `losses` (floored at
    /// 1e-12), noise variance = 1e-6 · signal.
    pub fn from_losses(losses: &[f64]) -> Self {
        let n = losses.len().max(1) as f64;
        let mean = losses.iter().sum::<f64>() / n;
        let var = losses.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
        let signal = var.max(1e-12);
        SeKernel {
            length_scales: [0.2, 0.2],
            signal_variance: signal,
            noise_variance: 1e-6 * signal,
        }
    }

    pub fn covariance(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let r2: f64 = (0..2)
            .map(|d| ((a[d] - b[d]) / self.length_scales[d]).powi(2))
            .sum();
        self.signal_variance * (-0.5 * r2).exp()
    }

    fn validate(&self) -> Result<()> {
        let ok = self.length_scales.iter().all(|l| *l > 0.0 && l.is_finite())
            && self.signal_variance > 0.0
            && self.noise_variance > 0.0
            && self.signal_variance.is_finite()
            && self.noise_variance.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid kernel {self:?}")))
        }
    }
}

/// Observations plus the factorization of their covariance.
///
/// The prior mean is the mean of the observed losses. With `adaptive` set the
/// kernel is re-derived from the losses by [`SeKernel::from_losses`] after
/// every update.
#[derive(Debug, Clone)]
pub struct GpState {
    kernel: SeKernel,
    adaptive: bool,
    points: Vec<[f64; 2]>,
    losses: Vec<f64>,
    prior_mean: f64,
    factor: Option<Cholesky>,
    /// `K⁻¹ (y - m)`
    coefficients: Array1<f64>,
}

impl GpState {
    /// A GP with fixed hyperparameters.
    pub fn new(kernel: SeKernel) -> Result<Self> {
        kernel.validate()?;
        Ok(GpState {
            kernel,
            adaptive: false,
            points: Vec::new(),
            losses: Vec::new(),
            prior_mean: 0.0,
            factor: None,
            coefficients: Array1::zeros(0),
        })
    }

    /// A GP whose hyperparameters follow the observed losses.
    pub fn adaptive() -> Self {
        GpState {
            adaptive: true,
            ..GpState::new(SeKernel::from_losses(&[])).expect("default kernel is valid")
        }
    }

    pub fn kernel(&self) -> SeKernel {
        self.kernel
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn losses(&self) -> &[f64] {
        &self.losses
    }

    pub fn prior_mean(&self) -> f64 {
        self.prior_mean
    }

    fn refit(mut self) -> Result<Self> {
        if self.adaptive {
            self.kernel = SeKernel::from_losses(&self.losses);
        }
        let n = self.points.len();
        self.prior_mean = self.losses.iter().sum::<f64>() / n as f64;
        let mut k = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let v = self.kernel.covariance(self.points[i], self.points[j]);
                k[[i, j]] = v;
                k[[j, i]] = v;
            }
            k[[i, i]] += self.kernel.noise_variance;
        }
        let factor = Cholesky::with_jitter(&k)?;
        let centered: Array1<f64> = self.losses.iter().map(|l| l - self.prior_mean).collect();
        self.coefficients = factor.solve(centered.view());
        self.factor = Some(factor);
        Ok(self)
    }
}

fn check_point(point: [f64; 2]) -> Result<()> {
    if point.iter().all(|u| (0.0..=1.0).contains(u)) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "GP input {point:?} lies outside the unit square"
        )))
    }
}

/// A new state with `(point, loss)` added.
pub fn gp_update(state: &GpState, point: [f64; 2], loss: f64) -> Result<GpState> {
    check_point(point)?;
    if !loss.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "cannot condition on loss {loss}"
        )));
    }
    let mut next = state.clone();
    next.points.push(point);
    next.losses.push(loss);
    next.refit()
}

/// Posterior mean and standard deviation of the latent function at `point`.
pub fn gp_posterior(state: &GpState, point: [f64; 2]) -> (f64, f64) {
    let Some(factor) = &state.factor else {
        return (state.prior_mean, state.kernel.signal_variance.sqrt());
    };
    let cross: Array1<f64> = state
        .points
        .iter()
        .map(|&p| state.kernel.covariance(point, p))
        .collect();
    let mean = state.prior_mean + cross.dot(&state.coefficients);
    let v = factor.forward(cross.view());
    let var = (state.kernel.signal_variance - v.dot(&v)).max(0.0);
    (mean, var.sqrt())
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `(L† - μ) Φ(Z) + σ φ(Z)` with `Z = (L† - μ)/σ`, and `max(0, L† - μ)` when
/// σ = 0.
pub fn improvement_from_moments(mean: f64, std: f64, incumbent: f64) -> f64 {
    let gain = incumbent - mean;
    if !(std > 0.0) {
        return gain.max(0.0);
    }
    let z = gain / std;
    (gain * std_normal_cdf(z) + std * std_normal_pdf(z)).max(0.0)
}

/// Expected improvement below `incumbent` at `point`.
pub fn expected_improvement(state: &GpState, point: [f64; 2], incumbent: f64) -> f64 {
    let (mean, std) = gp_posterior(state, point);
    improvement_from_moments(mean, std, incumbent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed(noise: f64) -> GpState {
        GpState::new(SeKernel {
            length_scales: [0.2, 0.2],
            signal_variance: 1.0,
            noise_variance: noise,
        })
        .unwrap()
    }

    #[test]
    fn interpolates_single_point() {
        let s = gp_update(&fixed(1e-10), [0.3, 0.6], 2.5).unwrap();
        let (m, sd) = gp_posterior(&s, [0.3, 0.6]);
        assert!((m - 2.5).abs() < 1e-6);
        assert!(sd <= 1e-3);
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let s = gp_update(&fixed(1e-6), [0.0, 0.0], 1.0).unwrap();
        let s = gp_update(&s, [0.1, 0.0], 3.0).unwrap();
        let (m, sd) = gp_posterior(&s, [1.0, 1.0]);
        assert!((m - s.prior_mean()).abs() < 1e-6);
        assert!((sd * sd - 1.0).abs() < 0.01);
    }

    #[test]
    fn two_point_posterior_by_hand() {
        let k = SeKernel {
            length_scales: [0.3, 0.5],
            signal_variance: 2.0,
            noise_variance: 0.01,
        };
        let mut s = GpState::new(k).unwrap();
        let (p1, p2, q) = ([0.1, 0.2], [0.5, 0.4], [0.3, 0.35]);
        s = gp_update(&s, p1, 1.0).unwrap();
        s = gp_update(&s, p2, -1.0).unwrap();
        // explicit 2x2 inverse
        let m = 0.0;
        let a = k.covariance(p1, p1) + 0.01;
        let d = k.covariance(p2, p2) + 0.01;
        let b = k.covariance(p1, p2);
        let det = a * d - b * b;
        let inv = [[d / det, -b / det], [-b / det, a / det]];
        let kq = [k.covariance(q, p1), k.covariance(q, p2)];
        let yc = [1.0 - m, -1.0 - m];
        let alpha = [
            inv[0][0] * yc[0] + inv[0][1] * yc[1],
            inv[1][0] * yc[0] + inv[1][1] * yc[1],
        ];
        let mean = m + kq[0] * alpha[0] + kq[1] * alpha[1];
        let quad = kq[0] * (inv[0][0] * kq[0] + inv[0][1] * kq[1])
            + kq[1] * (inv[1][0] * kq[0] + inv[1][1] * kq[1]);
        let var = 2.0 - quad;
        let (gm, gs) = gp_posterior(&s, q);
        assert!((gm - mean).abs() < 1e-12);
        assert!((gs * gs - var).abs() < 1e-12);
    }

    #[test]
    fn update_is_persistent() {
        let s0 = fixed(1e-6);
        let s1 = gp_update(&s0, [0.5, 0.5], 1.0).unwrap();
        assert_eq!(s0.points().len(), 0);
        assert_eq!(s1.points().len(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        let s = fixed(1e-6);
        assert!(gp_update(&s, [1.2, 0.0], 1.0).is_err());
        assert!(gp_update(&s, [0.2, 0.0], f64::NAN).is_err());
        assert!(GpState::new(SeKernel {
            length_scales: [0.0, 1.0],
            signal_variance: 1.0,
            noise_variance: 1e-6
        })
        .is_err());
    }

    #[test]
    fn improvement_examples() {
        assert_eq!(improvement_from_moments(1.0, 0.0, 1.0), 0.0);
        assert!((improvement_from_moments(1.0, 1.0, 1.0) - 0.398_942_280_401_432_7).abs() < 1e-12);
        assert!((improvement_from_moments(0.0, 1e-12, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(improvement_from_moments(0.0, 0.0, 1.0), 1.0);
        assert_eq!(improvement_from_moments(2.0, 0.0, 1.0), 0.0);
    }
}
