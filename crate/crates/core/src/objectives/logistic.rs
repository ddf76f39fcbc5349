use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::stacked::{dot, norm_sq};

/// Ridge-regularized logistic loss on local samples:
/// `f(x) = (1/n) Σ_j log(1 + exp(−y_j z_jᵀ x)) + (r/2)‖x‖²`.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticRidge {
    d: usize,
    /// Row-major `n × d`.
    features: Vec<f64>,
    labels: Vec<f64>,
    ridge: f64,
    smoothness: f64,
}

impl LogisticRidge {
    pub fn new(d: usize, features: Vec<f64>, labels: Vec<f64>, ridge: f64) -> Result<Self> {
        if d == 0 || features.len() != labels.len() * d {
            return Err(Error::shape(
                format!("{} x {d} features", labels.len()),
                format!("{} entries", features.len()),
            ));
        }
        if !(ridge > 0.0 && ridge.is_finite()) {
            return Err(Error::config("problem.ridge", "must be positive"));
        }
        if let Some(y) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::config("labels", format!("label {y} is not ±1")));
        }
        let n = labels.len();
        // sigmoid curvature is at most 1/4
        let gram_max = if n == 0 {
            0.0
        } else {
            let z = DMatrix::from_row_slice(n, d, &features);
            SymmetricEigen::new(z.transpose() * &z).eigenvalues.max().max(0.0)
        };
        let smoothness = if n == 0 { ridge } else { gram_max / (4.0 * n as f64) + ridge };
        Ok(LogisticRidge {
            d,
            features,
            labels,
            ridge,
            smoothness,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn samples(&self) -> usize {
        self.labels.len()
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn strong_convexity(&self) -> f64 {
        self.ridge
    }

    fn sample(&self, j: usize) -> &[f64] {
        &self.features[j * self.d..(j + 1) * self.d]
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.samples();
        let loss: f64 = (0..n)
            .map(|j| softplus(-self.labels[j] * dot(self.sample(j), x)))
            .sum();
        let data = if n == 0 { 0.0 } else { loss / n as f64 };
        data + 0.5 * self.ridge * norm_sq(x)
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, xi) in out.iter_mut().zip(x) {
            *o = self.ridge * xi;
        }
        let n = self.samples();
        if n == 0 {
            return;
        }
        let inv_n = 1.0 / n as f64;
        for j in 0..n {
            let z = self.sample(j);
            let y = self.labels[j];
            let w = -y * sigmoid(-y * dot(z, x)) * inv_n;
            for (o, zk) in out.iter_mut().zip(z) {
                *o += w * zk;
            }
        }
    }
}

/// `log(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_scalar_helpers() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert_eq!(sigmoid(0.0), 0.5);
        assert!((sigmoid(40.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_labels_and_ridge() {
        assert!(LogisticRidge::new(1, vec![1.0], vec![0.5], 0.1).is_err());
        assert!(LogisticRidge::new(1, vec![1.0], vec![1.0], 0.0).is_err());
    }
}
