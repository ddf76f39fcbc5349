//! Per-node smooth strongly convex objectives and their ensemble constants.

mod generate;
mod libsvm;
mod logistic;
mod quadratic;

pub use generate::{generate_quadratic_ensemble, QuadraticSpec};
pub use libsvm::{parse_libsvm, read_libsvm, LibsvmData};
pub use logistic::LogisticRidge;
pub use quadratic::Quadratic;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::stacked::StackedVector;

#[derive(Clone, Debug, PartialEq)]
pub enum NodeObjective {
    Quadratic(Quadratic),
    Logistic(LogisticRidge),
}

impl NodeObjective {
    pub fn dim(&self) -> usize {
        match self {
            NodeObjective::Quadratic(q) => q.dim(),
            NodeObjective::Logistic(l) => l.dim(),
        }
    }

    /// `L_i`
    pub fn smoothness(&self) -> f64 {
        match self {
            NodeObjective::Quadratic(q) => q.smoothness(),
            NodeObjective::Logistic(l) => l.smoothness(),
        }
    }

    /// `μ_i`
    pub fn strong_convexity(&self) -> f64 {
        match self {
            NodeObjective::Quadratic(q) => q.strong_convexity(),
            NodeObjective::Logistic(l) => l.strong_convexity(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            NodeObjective::Quadratic(q) => q.value(x),
            NodeObjective::Logistic(l) => l.value(x),
        }
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            NodeObjective::Quadratic(q) => q.grad_into(x, out),
            NodeObjective::Logistic(l) => l.grad_into(x, out),
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        self.grad_into(x, &mut g);
        g
    }
}

/// Local (worst-case) and global (averaged) smoothness and strong-convexity constants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleConstants {
    pub l_local: f64,
    pub mu_local: f64,
    pub l_global: f64,
    pub mu_global: f64,
}

impl EnsembleConstants {
    /// Aggregates per-node `(L_i, μ_i)` pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        assert!(!pairs.is_empty());
        let m = pairs.len() as f64;
        EnsembleConstants {
            l_local: pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
            mu_local: pairs.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
            l_global: pairs.iter().map(|p| p.0).sum::<f64>() / m,
            mu_global: pairs.iter().map(|p| p.1).sum::<f64>() / m,
        }
    }

    pub fn global_condition(&self) -> f64 {
        self.l_global / self.mu_global
    }
}

#[derive(Clone, Debug)]
pub struct ObjectiveEnsemble {
    nodes: Vec<NodeObjective>,
    d: usize,
    constants: EnsembleConstants,
    minimizer: Option<Vec<f64>>,
}

impl ObjectiveEnsemble {
    pub fn new(nodes: Vec<NodeObjective>) -> Result<Self> {
        let first = nodes
            .first()
            .ok_or_else(|| Error::config("network.m", "ensemble needs at least one node"))?;
        let d = first.dim();
        for (i, n) in nodes.iter().enumerate() {
            if n.dim() != d {
                return Err(Error::shape(format!("node {i} of dimension {d}"), n.dim()));
            }
            let (l, mu) = (n.smoothness(), n.strong_convexity());
            if !(mu > 0.0 && mu <= l * (1.0 + 1e-12) && l.is_finite()) {
                return Err(Error::config(
                    "problem",
                    format!("node {i} has invalid constants L = {l}, μ = {mu}"),
                ));
            }
        }
        let pairs: Vec<_> = nodes
            .iter()
            .map(|n| (n.smoothness(), n.strong_convexity()))
            .collect();
        Ok(ObjectiveEnsemble {
            constants: EnsembleConstants::from_pairs(&pairs),
            nodes,
            d,
            minimizer: None,
        })
    }

    pub fn m(&self) -> usize {
        self.nodes.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nodes(&self) -> &[NodeObjective] {
        &self.nodes
    }

    pub fn constants(&self) -> EnsembleConstants {
        self.constants
    }

    /// Unconstrained minimizer of the averaged objective, recorded by the
    /// quadratic generator.
    pub fn minimizer(&self) -> Option<&[f64]> {
        self.minimizer.as_deref()
    }

    /// Solves `(Σ A_i) x = Σ b_i` when every node is quadratic.
    pub fn quadratic_minimizer(&self) -> Option<Vec<f64>> {
        let d = self.d;
        let mut a = DMatrix::<f64>::zeros(d, d);
        let mut b = DVector::<f64>::zeros(d);
        for n in &self.nodes {
            let NodeObjective::Quadratic(q) = n else {
                return None;
            };
            a += DMatrix::from_row_slice(d, d, q.matrix());
            b += DVector::from_column_slice(q.linear());
        }
        let chol = a.cholesky()?;
        Some(chol.solve(&b).as_slice().to_vec())
    }

    pub(crate) fn with_minimizer(mut self, x: Vec<f64>) -> Self {
        self.minimizer = Some(x);
        self
    }

    fn check(&self, x: &StackedVector) -> Result<()> {
        if x.m() != self.m() || x.d() != self.d {
            return Err(Error::shape(
                format!("({}, {})", self.m(), self.d),
                format!("({}, {})", x.m(), x.d()),
            ));
        }
        Ok(())
    }

    fn check_point(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.d {
            return Err(Error::shape(self.d, y.len()));
        }
        Ok(())
    }

    /// `∇F(x)`: block `i` is `∇f_i(x_i)`.
    pub fn grad_stacked(&self, x: &StackedVector, exec: Exec) -> Result<StackedVector> {
        let mut out = StackedVector::zeros(self.m(), self.d);
        self.grad_stacked_into(x, &mut out, exec)?;
        Ok(out)
    }

    pub fn grad_stacked_into(&self, x: &StackedVector, out: &mut StackedVector, exec: Exec) -> Result<()> {
        self.check(x)?;
        self.check(out)?;
        exec.for_each_chunk(out.as_mut_slice(), self.d, |i, g| {
            self.nodes[i].grad_into(x.block(i), g)
        });
        Ok(())
    }

    /// `F(x) = Σ_i f_i(x_i)`
    pub fn value_stacked(&self, x: &StackedVector) -> Result<f64> {
        self.check(x)?;
        Ok(self
            .nodes
            .iter()
            .zip(x.blocks())
            .map(|(n, b)| n.value(b))
            .sum())
    }

    /// `f(y) = (1/m) Σ_i f_i(y)`
    pub fn value_avg(&self, y: &[f64]) -> Result<f64> {
        self.check_point(y)?;
        Ok(self.nodes.iter().map(|n| n.value(y)).sum::<f64>() / self.m() as f64)
    }

    /// `∇f(y) = (1/m) Σ_i ∇f_i(y)`
    pub fn grad_avg(&self, y: &[f64]) -> Result<Vec<f64>> {
        self.check_point(y)?;
        let mut acc = vec![0.0; self.d];
        let mut g = vec![0.0; self.d];
        for n in &self.nodes {
            n.grad_into(y, &mut g);
            acc.iter_mut().zip(&g).for_each(|(a, v)| *a += v);
        }
        let inv = 1.0 / self.m() as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity_quadratic(d: usize) -> NodeObjective {
        let mut a = vec![0.0; d * d];
        for i in 0..d {
            a[i * d + i] = 1.0;
        }
        NodeObjective::Quadratic(Quadratic::new(a, vec![0.0; d]).unwrap())
    }

    #[test]
    fn identity_gradient_and_value() {
        let ens = ObjectiveEnsemble::new(vec![identity_quadratic(2), identity_quadratic(2)]).unwrap();
        let x = StackedVector::from_blocks(&[[1.0, 2.0], [0.0, 0.0]]).unwrap();
        let g = ens.grad_stacked(&x, Exec::Sequential).unwrap();
        assert_eq!(g.block(0), &[1.0, 2.0]);
        assert_eq!(ens.value_avg(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn gradient_vanishes_at_node_minimizer() {
        let a = vec![4.0, 1.0, 1.0, 3.0];
        let b = vec![1.0, 2.0];
        let q = Quadratic::new(a, b).unwrap();
        // A⁻¹ b for [[4,1],[1,3]]
        let xs = [1.0 / 11.0, 7.0 / 11.0];
        let mut g = [0.0; 2];
        q.grad_into(&xs, &mut g);
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn logistic_single_sample_gradient() {
        let l = LogisticRidge::new(2, vec![1.0, 0.0], vec![1.0], 0.1).unwrap();
        let g = NodeObjective::Logistic(l.clone()).grad(&[0.0, 0.0]);
        assert!((g[0] + 0.5).abs() < 1e-15 && g[1] == 0.0);

        // central-difference oracle on the scalar loss log(1 + e^{-t}) + 0.05 t²
        let h = 1e-6;
        let phi = |t: f64| (1.0 + (-t).exp()).ln() + 0.05 * t * t;
        let fd = (phi(h) - phi(-h)) / (2.0 * h);
        assert!((fd - g[0]).abs() < 1e-8);
        assert!((l.value(&[0.3, 0.0]) - phi(0.3)).abs() < 1e-15);
    }

    #[test]
    fn constants_from_pairs() {
        let c = EnsembleConstants::from_pairs(&[(10.0, 1.0), (2.0, 2.0)]);
        assert_eq!((c.l_local, c.mu_local, c.l_global, c.mu_global), (10.0, 1.0, 6.0, 1.5));
        let c = EnsembleConstants::from_pairs(&[(3.0, 0.5); 4]);
        assert_eq!((c.l_local, c.mu_local, c.l_global, c.mu_global), (3.0, 0.5, 3.0, 0.5));
    }

    #[test]
    fn constants_are_ordered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = rng.random_range(1..12);
            let pairs: Vec<_> = (0..m)
                .map(|_| {
                    let mu: f64 = rng.random_range(0.01..5.0);
                    (mu * rng.random_range(1.0..50.0), mu)
                })
                .collect();
            let c = EnsembleConstants::from_pairs(&pairs);
            assert!(c.mu_local <= c.mu_global && c.mu_global <= c.l_global && c.l_global <= c.l_local);
        }
    }

    #[test]
    fn rejects_mismatched_shapes() {
        let ens = ObjectiveEnsemble::new(vec![identity_quadratic(2); 3]).unwrap();
        assert!(ens.grad_stacked(&StackedVector::zeros(2, 2), Exec::Sequential).is_err());
        assert!(ens.value_stacked(&StackedVector::zeros(3, 3)).is_err());
        assert!(ens.value_avg(&[1.0]).is_err());
        assert!(ObjectiveEnsemble::new(vec![identity_quadratic(2), identity_quadratic(3)]).is_err());
        assert!(Quadratic::new(vec![1.0, 2.0, 0.0, 1.0], vec![0.0; 2]).is_err());
        assert!(Quadratic::new(vec![1.0, 0.0, 0.0, -1.0], vec![0.0; 2]).is_err());
    }
}
