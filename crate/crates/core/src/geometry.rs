//! Information-geometry primitives on positive numbers and discrete
//! probability vectors.
//!
//! The representation map `f_α(a) = a^{(1-α)/2}` (with `f_1 = ln`) induces the
//! weighted f-mean
//!
//! ```text
//! m_f^{(λ,α)}(a, b) = f_α⁻¹((1-λ) f_α(a) + λ f_α(b))
//! ```
//!
//! which covers the arithmetic (α = -1), geometric (α = 1) and harmonic
//! (α = 3) means. Everything here is a pure function.

use crate::error::{Error, Result};

/// Half-width of the band around α = 1 where the log/exp formulas are used.
pub const LOG_BRANCH_TOLERANCE: f64 = 1e-8;

/// Tolerance on `Σ p_i = 1` for [`ProbVector`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// The α coordinate of the f-representation.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub fn new(value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be finite, got {value}"
            )));
        }
        Ok(Alpha(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True when the log/exp (geometric) formulas apply.
    pub fn is_log_branch(self) -> bool {
        (self.0 - 1.0).abs() < LOG_BRANCH_TOLERANCE
    }

    /// The power `(1 - α) / 2` of the representation map.
    pub fn exponent(self) -> f64 {
        (1.0 - self.0) / 2.0
    }
}

/// A discrete probability vector: nonnegative entries summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Domain("probability vector is empty".into()));
        }
        if let Some(i) = entries.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Domain(format!(
                "entry {i} = {} is not a nonnegative finite number",
                entries[i]
            )));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::Domain(format!("entries sum to {total}, not 1")));
        }
        Ok(ProbVector(entries))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// The representation map `f_α`.
pub fn f_alpha(a: f64, alpha: f64) -> Result<f64> {
    let alpha = Alpha::new(alpha)?;
    if !(a >= 0.0) || a.is_infinite() {
        return Err(Error::Domain(format!("f_alpha needs a >= 0, got {a}")));
    }
    if a == 0.0 {
        // 0^e with e > 0; the log branch and negative exponents diverge.
        return if alpha.value() < 1.0 && !alpha.is_log_branch() {
            Ok(0.0)
        } else {
            Err(Error::Domain(format!(
                "f_alpha(0) diverges for alpha = {}",
                alpha.value()
            )))
        };
    }
    if alpha.is_log_branch() {
        Ok(a.ln())
    } else {
        Ok(a.powf(alpha.exponent()))
    }
}

/// Inverse of [`f_alpha`].
pub fn f_alpha_inv(v: f64, alpha: f64) -> Result<f64> {
    let alpha = Alpha::new(alpha)?;
    if alpha.is_log_branch() {
        if v.is_nan() {
            return Err(Error::Domain("f_alpha_inv of NaN".into()));
        }
        return Ok(v.exp());
    }
    if !(v > 0.0) || v.is_infinite() {
        return Err(Error::Domain(format!(
            "f_alpha_inv needs a positive finite value for alpha = {}, got {v}",
            alpha.value()
        )));
    }
    Ok(v.powf(1.0 / alpha.exponent()))
}

/// `ln m_f^{(λ,α)}(1, e^d)`, the log of the f-mean between 1 and `e^d`.
///
/// Written as `ln(1 + λ·expm1(e·d)) / e` so that small exponents near the log
/// branch keep full relative precision; large positive `e·d` switches to a
/// form that cannot overflow.
pub(crate) fn log_unit_interpolation(d: f64, lambda: f64, alpha: Alpha) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    if alpha.is_log_branch() {
        return lambda * d;
    }
    let e = alpha.exponent();
    let t = e * d;
    if t <= 700.0 {
        (lambda * t.exp_m1()).ln_1p() / e
    } else {
        // 1 + λ(e^t - 1) = λ e^t (1 + (1-λ)/λ · e^{-t})
        (lambda.ln() + t + ((1.0 - lambda) / lambda * (-t).exp()).ln_1p()) / e
    }
}

/// The weighted f-mean `m_f^{(λ,α)}(a, b)` of two positive numbers.
pub fn f_interpolate(a: f64, b: f64, lambda: f64, alpha: f64) -> Result<f64> {
    let alpha = Alpha::new(alpha)?;
    check_lambda(lambda)?;
    for (name, v) in [("a", a), ("b", b)] {
        if !(v > 0.0) || v.is_infinite() {
            return Err(Error::Domain(format!(
                "f_interpolate needs {name} > 0, got {v}"
            )));
        }
    }
    if lambda == 0.0 {
        return Ok(a);
    }
    if lambda == 1.0 {
        return Ok(b);
    }
    let m = a * log_unit_interpolation(b.ln() - a.ln(), lambda, alpha).exp();
    Ok(m.clamp(a.min(b), a.max(b)))
}

/// The α-divergence `4/(1-α²) (1 - Σ p_i^{(1-α)/2} q_i^{(1+α)/2})`.
///
/// The KL limits at `|α| = 1` are rejected.
pub fn alpha_divergence(p: &ProbVector, q: &ProbVector, alpha: f64) -> Result<f64> {
    let alpha = Alpha::new(alpha)?.value();
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    if (alpha.abs() - 1.0).abs() < LOG_BRANCH_TOLERANCE {
        return Err(Error::Domain(
            "alpha-divergence is not defined here for |alpha| = 1".into(),
        ));
    }
    let ep = (1.0 - alpha) / 2.0;
    let eq = (1.0 + alpha) / 2.0;
    let mut overlap = 0.0;
    for (i, (&pi, &qi)) in p.as_slice().iter().zip(q.as_slice()).enumerate() {
        if (pi == 0.0 && ep < 0.0) || (qi == 0.0 && eq < 0.0) {
            return Err(Error::Domain(format!(
                "component {i} is zero and is raised to a negative power"
            )));
        }
        if pi == 0.0 || qi == 0.0 {
            continue;
        }
        overlap += (ep * pi.ln() + eq * qi.ln()).exp();
    }
    Ok((4.0 / (1.0 - alpha * alpha) * (1.0 - overlap)).max(0.0))
}

/// The point at `λ` on the α-geodesic from `p` to `q`: componentwise
/// f-interpolation, renormalized to the simplex.
pub fn alpha_geodesic_point(
    p: &ProbVector,
    q: &ProbVector,
    lambda: f64,
    alpha: f64,
) -> Result<ProbVector> {
    let alpha = Alpha::new(alpha)?;
    check_lambda(lambda)?;
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    if lambda == 0.0 {
        return Ok(p.clone());
    }
    if lambda == 1.0 {
        return Ok(q.clone());
    }
    let zero_ok = alpha.value() < 1.0 && !alpha.is_log_branch();
    let mut path = Vec::with_capacity(p.len());
    for (&pi, &qi) in p.as_slice().iter().zip(q.as_slice()) {
        let r = match (pi > 0.0, qi > 0.0) {
            (true, true) => f_interpolate(pi, qi, lambda, alpha.value())?,
            _ if !zero_ok => {
                return Err(Error::Domain(format!(
                    "zero component on the alpha-geodesic with alpha = {}",
                    alpha.value()
                )))
            }
            (false, false) => 0.0,
            _ => f_alpha_inv(
                (1.0 - lambda) * f_alpha(pi, alpha.value())? + lambda * f_alpha(qi, alpha.value())?,
                alpha.value(),
            )?,
        };
        path.push(r);
    }
    let total: f64 = path.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Domain(format!("geodesic normalizer is {total}")));
    }
    Ok(ProbVector(path.into_iter().map(|r| r / total).collect()))
}
