//! Small dense symmetric positive-definite solves.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    /// Factor `a`, failing if any pivot drops below `rel_pivot · max diag(a)`.
    pub fn new(a: &Array2<f64>, rel_pivot: f64) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: a.ncols(),
            });
        }
        let scale = a.diag().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let floor = rel_pivot * scale;
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]];
            for k in 0..j {
                diag -= l[[j, k]] * l[[j, k]];
            }
            if !(diag > floor) || !diag.is_finite() {
                return Err(Error::Singular(format!("pivot {j} is {diag:e}")));
            }
            let djj = diag.sqrt();
            l[[j, j]] = djj;
            for i in (j + 1)..n {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s -= l[[i, k]] * l[[j, k]];
                }
                l[[i, j]] = s / djj;
            }
        }
        Ok(Cholesky { lower: l })
    }

    /// Factor `a`, adding diagonal jitter `1e-12·tr/n`, growing ×10 up to
    /// `1e-6·tr/n`, until the factorization succeeds.
    pub fn with_jitter(a: &Array2<f64>) -> Result<Self> {
        if let Ok(c) = Cholesky::new(a, 0.0) {
            return Ok(c);
        }
        let n = a.nrows().max(1) as f64;
        let base = a.diag().sum().abs() / n;
        let mut jitter = 1e-12 * base;
        let mut last = Error::Singular("matrix is not positive definite".into());
        while jitter <= 1e-6 * base * (1.0 + 1e-9) {
            let mut shifted = a.clone();
            shifted.diag_mut().mapv_inplace(|v| v + jitter);
            match Cholesky::new(&shifted, 0.0) {
                Ok(c) => return Ok(c),
                Err(e) => last = e,
            }
            jitter *= 10.0;
        }
        Err(last)
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    pub fn lower(&self) -> &Array2<f64> {
        &self.lower
    }

    /// Solve `L z = b`.
    pub fn forward(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let n = self.dim();
        let l = &self.lower;
        let mut z = b.to_owned();
        for i in 0..n {
            let mut s = z[i];
            for k in 0..i {
                s -= l[[i, k]] * z[k];
            }
            z[i] = s / l[[i, i]];
        }
        z
    }

    /// Solve `Lᵀ x = z`.
    pub fn backward(&self, z: ArrayView1<f64>) -> Array1<f64> {
        let n = self.dim();
        let l = &self.lower;
        let mut x = z.to_owned();
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s -= l[[k, i]] * x[k];
            }
            x[i] = s / l[[i, i]];
        }
        x
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let z = self.forward(b);
        self.backward(z.view())
    }

    /// Solve `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Array2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(b.raw_dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            out.column_mut(j).assign(&self.solve(col));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn solves_spd_system() {
        let a = array![[4.0, 2.0, 0.6], [2.0, 5.0, 1.0], [0.6, 1.0, 3.0]];
        let b = array![1.0, -2.0, 0.5];
        let x = Cholesky::new(&a, 1e-14).unwrap().solve(b.view());
        let r = a.dot(&x) - &b;
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn detects_singular() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(Cholesky::new(&a, 1e-12).is_err());
    }

    #[test]
    fn jitter_rescues_semidefinite() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        let c = Cholesky::with_jitter(&a).unwrap();
        assert_eq!(c.dim(), 2);
        let neg = array![[-1.0, 0.0], [0.0, -1.0]];
        assert!(Cholesky::with_jitter(&neg).is_err());
    }
}
