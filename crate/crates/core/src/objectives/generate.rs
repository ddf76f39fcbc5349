//! Seeded synthetic quadratic ensembles with placed spectra.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{NodeObjective, ObjectiveEnsemble, Quadratic};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticSpec {
    pub seed: u64,
    pub m: usize,
    pub d: usize,
    /// Target for `L_g / μ_g`; hit exactly by construction.
    pub condition_target: f64,
    /// Ratio of the log-uniform ranges for per-node `μ_i` and smoothness
    /// weights; `1` gives homogeneous nodes.
    pub heterogeneity: f64,
    /// All nodes share one eigenbasis, so the averaged Hessian has extreme
    /// eigenvalues exactly `L_g` and `μ_g`. With independent bases the
    /// average is better conditioned than `L_g / μ_g`.
    pub aligned: bool,
}

impl QuadraticSpec {
    pub fn new(seed: u64, m: usize, d: usize, condition_target: f64) -> Self {
        QuadraticSpec {
            seed,
            m,
            d,
            condition_target,
            heterogeneity: 1.0,
            aligned: false,
        }
    }

    pub fn heterogeneity(mut self, h: f64) -> Self {
        self.heterogeneity = h;
        self
    }

    pub fn aligned(mut self, aligned: bool) -> Self {
        self.aligned = aligned;
        self
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, hi: f64) -> f64 {
    (rng.random::<f64>() * hi.ln()).exp()
}

/// Node `i` gets `μ_i` log-uniform in `[1, h]` and
/// `L_i = μ_i + (κ − 1) μ_g · m w_i / Σ w`, so `L_g = κ μ_g` exactly.
/// `A_i = Q_i diag(L_i, …, μ_i) Q_iᵀ` with `Q_i` from a seeded Gaussian QR
/// (one shared `Q` when `aligned`).
pub fn generate_quadratic_ensemble(spec: &QuadraticSpec) -> Result<ObjectiveEnsemble> {
    let QuadraticSpec {
        seed,
        m,
        d,
        condition_target: kappa,
        heterogeneity,
        aligned,
    } = *spec;
    if m == 0 {
        return Err(Error::config("network.m", "must be at least 1"));
    }
    if d == 0 {
        return Err(Error::config("problem.d", "must be at least 1"));
    }
    if !(kappa >= 1.0 && kappa.is_finite()) {
        return Err(Error::config("problem.condition", "must be a finite value >= 1"));
    }
    if d == 1 && kappa > 1.0 {
        return Err(Error::config(
            "problem.condition",
            "a one-dimensional quadratic has unit condition number; use d >= 2",
        ));
    }
    if !(heterogeneity >= 1.0 && heterogeneity.is_finite()) {
        return Err(Error::config("problem.heterogeneity", "must be a finite value >= 1"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu: Vec<f64> = (0..m).map(|_| log_uniform(&mut rng, heterogeneity)).collect();
    let w: Vec<f64> = (0..m).map(|_| log_uniform(&mut rng, heterogeneity)).collect();
    let mu_g = mu.iter().sum::<f64>() / m as f64;
    let w_sum: f64 = w.iter().sum();
    let center: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let basis = |rng: &mut ChaCha8Rng| DMatrix::<f64>::from_fn(d, d, |_, _| rng.sample(StandardNormal)).qr().q();
    let shared = aligned.then(|| basis(&mut rng));

    let mut nodes = Vec::with_capacity(m);
    for i in 0..m {
        let l_i = mu[i] + (kappa - 1.0) * mu_g * m as f64 * w[i] / w_sum;
        let a = if l_i == mu[i] {
            let mut a = vec![0.0; d * d];
            (0..d).for_each(|k| a[k * d + k] = mu[i]);
            a
        } else {
            let mut spectrum = vec![0.0; d];
            spectrum[0] = l_i;
            spectrum[d - 1] = mu[i];
            for s in spectrum.iter_mut().take(d - 1).skip(1) {
                *s = mu[i] * (rng.random::<f64>() * (l_i / mu[i]).ln()).exp();
            }
            let q = match &shared {
                Some(q) => q.clone(),
                None => basis(&mut rng),
            };
            let mut a = vec![0.0; d * d];
            for r in 0..d {
                for c in 0..=r {
                    let v: f64 = (0..d).map(|k| q[(r, k)] * spectrum[k] * q[(c, k)]).sum();
                    a[r * d + c] = v;
                    a[c * d + r] = v;
                }
            }
            a
        };
        // node minimizer scattered around a shared center
        let target: Vec<f64> = center
            .iter()
            .map(|c| c + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let b: Vec<f64> = (0..d)
            .map(|r| (0..d).map(|c| a[r * d + c] * target[c]).sum())
            .collect();
        nodes.push(NodeObjective::Quadratic(Quadratic::with_spectrum(a, b, l_i, mu[i])));
    }

    let ens = ObjectiveEnsemble::new(nodes)?;
    let xstar = ens
        .quadratic_minimizer()
        .ok_or_else(|| Error::config("problem", "generated system is singular"))?;
    Ok(ens.with_minimizer(xstar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    #[test]
    fn deterministic_for_seed() {
        let spec = QuadraticSpec::new(11, 5, 4, 10.0).heterogeneity(8.0);
        let a = generate_quadratic_ensemble(&spec).unwrap();
        let b = generate_quadratic_ensemble(&spec).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.minimizer(), b.minimizer());
        let c = generate_quadratic_ensemble(&QuadraticSpec { seed: 12, ..spec }).unwrap();
        assert_ne!(a.nodes(), c.nodes());
    }

    #[test]
    fn unit_condition_is_isotropic() {
        let ens = generate_quadratic_ensemble(&QuadraticSpec::new(3, 4, 3, 1.0).heterogeneity(5.0)).unwrap();
        for n in ens.nodes() {
            let NodeObjective::Quadratic(q) = n else { unreachable!() };
            let c = q.matrix()[0];
            for r in 0..3 {
                for k in 0..3 {
                    assert_eq!(q.matrix()[r * 3 + k], if r == k { c } else { 0.0 });
                }
            }
        }
    }

    #[test]
    fn hits_condition_and_spectrum() {
        for (seed, kappa) in [(1, 4.0), (2, 16.0), (3, 64.0), (4, 250.0)] {
            let ens = generate_quadratic_ensemble(&QuadraticSpec::new(seed, 7, 6, kappa).heterogeneity(10.0)).unwrap();
            let c = ens.constants();
            assert!((c.global_condition() / kappa - 1.0).abs() < 1e-12);
            for n in ens.nodes() {
                let NodeObjective::Quadratic(q) = n else { unreachable!() };
                let eig = SymmetricEigen::new(DMatrix::from_row_slice(6, 6, q.matrix())).eigenvalues;
                assert!((eig.max() - q.smoothness()).abs() < 1e-9 * q.smoothness());
                assert!((eig.min() - q.strong_convexity()).abs() < 1e-9 * q.smoothness());
            }
        }
    }

    #[test]
    fn heterogeneity_separates_local_and_global() {
        let ens = generate_quadratic_ensemble(&QuadraticSpec::new(9, 20, 5, 10.0).heterogeneity(30.0)).unwrap();
        let c = ens.constants();
        assert!(c.l_local / c.mu_local > 3.0 * c.global_condition());
    }

    #[test]
    fn recorded_minimizer_is_stationary() {
        let ens = generate_quadratic_ensemble(&QuadraticSpec::new(5, 6, 8, 30.0).heterogeneity(4.0)).unwrap();
        let g = ens.grad_avg(ens.minimizer().unwrap()).unwrap();
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-8);
    }

    #[test]
    fn aligned_average_spans_global_constants() {
        let spec = QuadraticSpec::new(4, 7, 5, 16.0).heterogeneity(6.0).aligned(true);
        let ens = generate_quadratic_ensemble(&spec).unwrap();
        let mut sum = DMatrix::<f64>::zeros(5, 5);
        for n in ens.nodes() {
            let NodeObjective::Quadratic(q) = n else { unreachable!() };
            sum += DMatrix::from_row_slice(5, 5, q.matrix());
        }
        let eig = SymmetricEigen::new(sum / 7.0).eigenvalues;
        let c = ens.constants();
        assert!((eig.max() - c.l_global).abs() < 1e-10 * c.l_global);
        assert!((eig.min() - c.mu_global).abs() < 1e-10 * c.l_global);
    }

    #[test]
    fn invalid_sizes() {
        assert!(generate_quadratic_ensemble(&QuadraticSpec::new(0, 0, 2, 2.0)).is_err());
        assert!(generate_quadratic_ensemble(&QuadraticSpec::new(0, 2, 0, 2.0)).is_err());
        assert!(generate_quadratic_ensemble(&QuadraticSpec::new(0, 2, 2, 0.5)).is_err());
        assert!(generate_quadratic_ensemble(&QuadraticSpec::new(0, 2, 1, 2.0)).is_err());
        assert!(generate_quadratic_ensemble(&QuadraticSpec::new(0, 2, 1, 1.0)).is_ok());
    }
}
