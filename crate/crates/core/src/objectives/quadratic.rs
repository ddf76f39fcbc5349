use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::stacked::dot;

/// `f(x) = ½ xᵀ A x − bᵀ x` with `A` symmetric positive definite.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    /// Row-major `d × d`.
    a: Vec<f64>,
    b: Vec<f64>,
    smoothness: f64,
    strong_convexity: f64,
}

impl Quadratic {
    /// Builds from an explicit matrix; `L` and `μ` are the extreme eigenvalues.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let d = b.len();
        if d == 0 || a.len() != d * d {
            return Err(Error::shape(format!("{d} x {d} matrix"), format!("{} entries", a.len())));
        }
        for i in 0..d {
            for j in 0..i {
                let (x, y) = (a[i * d + j], a[j * d + i]);
                if (x - y).abs() > 1e-12 * (1.0 + x.abs().max(y.abs())) {
                    return Err(Error::config("quadratic.A", "matrix is not symmetric"));
                }
            }
        }
        let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &a));
        let lmax = eig.eigenvalues.max();
        let lmin = eig.eigenvalues.min();
        if !(lmin > 0.0) {
            return Err(Error::config(
                "quadratic.A",
                format!("matrix is not positive definite (λ_min = {lmin:e})"),
            ));
        }
        Ok(Quadratic {
            a,
            b,
            smoothness: lmax,
            strong_convexity: lmin,
        })
    }

    /// Used by the generator, which places the spectrum explicitly.
    pub(crate) fn with_spectrum(a: Vec<f64>, b: Vec<f64>, smoothness: f64, strong_convexity: f64) -> Self {
        debug_assert_eq!(a.len(), b.len() * b.len());
        Quadratic {
            a,
            b,
            smoothness,
            strong_convexity,
        }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }

    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    pub fn strong_convexity(&self) -> f64 {
        self.strong_convexity
    }

    fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.a[i * d..(i + 1) * d]
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let quad: f64 = (0..self.dim()).map(|i| x[i] * dot(self.row(i), x)).sum();
        0.5 * quad - dot(&self.b, x)
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(self.row(i), x) - self.b[i];
        }
    }
}
