use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::error::Result;
use crate::exec::Exec;
use crate::stacked::StackedVector;

/// Sparse symmetric mixing matrix stored as per-node rows: a self weight
/// plus weights on neighbors. Applying it is one communication round.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingMatrix {
    self_weight: Vec<f64>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

/// Metropolis–Hastings weights: `W_ij = 1 / (1 + max(deg_i, deg_j))` on
/// edges, `W_ii = 1 − Σ_{j≠i} W_ij`.
pub fn metropolis_weights(m: usize, edges: &[(usize, usize)]) -> Result<MixingMatrix> {
    Ok(MixingMatrix::metropolis(&Graph::new(m, edges)?))
}

impl MixingMatrix {
    pub fn metropolis(graph: &Graph) -> Self {
        let m = graph.m();
        let deg = graph.degrees();
        let mut neighbors = vec![Vec::new(); m];
        for &(i, j) in graph.edges() {
            let w = 1.0 / (1.0 + deg[i].max(deg[j]) as f64);
            neighbors[i].push((j, w));
            neighbors[j].push((i, w));
        }
        for row in &mut neighbors {
            row.sort_by_key(|&(j, _)| j);
        }
        let self_weight = neighbors
            .iter()
            .map(|row| 1.0 - row.iter().map(|&(_, w)| w).sum::<f64>())
            .collect();
        MixingMatrix {
            self_weight,
            neighbors,
        }
    }

    /// `(W + I) / 2`
    pub fn lazy(mut self) -> Self {
        self.self_weight.iter_mut().for_each(|w| *w = 0.5 * (*w + 1.0));
        for row in &mut self.neighbors {
            row.iter_mut().for_each(|(_, w)| *w *= 0.5);
        }
        self
    }

    pub fn m(&self) -> usize {
        self.self_weight.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let m = self.m();
        let mut w = vec![0.0; m * m];
        for i in 0..m {
            w[i * m + i] = self.self_weight[i];
            for &(j, v) in &self.neighbors[i] {
                w[i * m + j] = v;
            }
        }
        w
    }

    /// Node `i` combines its own block with the blocks it receives from
    /// its neighbors: `out_i = W_ii v_i + Σ_j W_ij v_j`.
    pub fn apply_into(&self, v: &StackedVector, out: &mut StackedVector, exec: Exec) {
        assert_eq!(v.m(), self.m(), "mixing matrix size mismatch");
        assert!(v.same_shape(out));
        exec.for_each_chunk(out.as_mut_slice(), v.d(), |i, o| {
            let w = self.self_weight[i];
            for (o, x) in o.iter_mut().zip(v.block(i)) {
                *o = w * x;
            }
            for &(j, w) in &self.neighbors[i] {
                for (o, x) in o.iter_mut().zip(v.block(j)) {
                    *o += w * x;
                }
            }
        });
    }

    /// `(W − P) x` for a scalar per-node vector.
    fn apply_deviation(&self, x: &[f64], out: &mut [f64]) {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        for (i, o) in out.iter_mut().enumerate() {
            let mut s = self.self_weight[i] * x[i];
            for &(j, w) in &self.neighbors[i] {
                s += w * x[j];
            }
            *o = s - mean;
        }
    }

    /// `‖W − (1/m) 1 1ᵀ‖₂` by power iteration on `(W − P)²`.
    ///
    /// Stops once the eigen-residual drops below `tol`; the returned value is
    /// `sqrt(θ + ‖r‖)`, which bounds the top eigenvalue from above once the
    /// iteration has locked on.
    pub fn deviation_norm(&self, tol: f64) -> f64 {
        let m = self.m();
        if m == 1 {
            return 0.0;
        }
        const MAX_ITER: usize = 200_000;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_ca11);
        let mut v: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (mut w, mut z) = (vec![0.0; m], vec![0.0; m]);
        let mut estimate = 0.0;
        for _ in 0..MAX_ITER {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= n);
            self.apply_deviation(&v, &mut w);
            self.apply_deviation(&w, &mut z);
            let theta: f64 = v.iter().zip(&z).map(|(a, b)| a * b).sum();
            let r = v
                .iter()
                .zip(&z)
                .map(|(a, b)| (b - theta * a).powi(2))
                .sum::<f64>()
                .sqrt();
            estimate = (theta.max(0.0) + r).sqrt();
            if r <= tol {
                break;
            }
            std::mem::swap(&mut v, &mut z);
        }
        estimate
    }
}
