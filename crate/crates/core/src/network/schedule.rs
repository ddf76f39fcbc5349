use std::fmt;
use std::io::Write;
use std::ops::Range;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Graph, MixingMatrix};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::stacked::{consensus_error, StackedVector};

/// Residual tolerance for the spectral-norm power iteration.
pub const SPECTRAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Complete,
    Ring,
    Path,
    RingChords,
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "complete" => Ok(Topology::Complete),
            "ring" => Ok(Topology::Ring),
            "path" => Ok(Topology::Path),
            "ring-chords" => Ok(Topology::RingChords),
            other => Err(format!("unknown topology `{other}` (complete|ring|path|ring-chords)")),
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Complete => "complete",
            Topology::Ring => "ring",
            Topology::Path => "path",
            Topology::RingChords => "ring-chords",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TopologyConfig {
    pub m: usize,
    pub topology: Topology,
    /// Per-round independent edge-drop probability.
    pub p_drop: f64,
    pub lazy: bool,
    pub seed: u64,
    /// Random chords added to the ring for `ring-chords`.
    pub chords: usize,
    /// Number of distinct rounds before the sequence repeats.
    pub period: usize,
}

impl TopologyConfig {
    pub fn new(m: usize, topology: Topology) -> Self {
        TopologyConfig {
            m,
            topology,
            p_drop: 0.0,
            lazy: false,
            seed: 0,
            chords: m / 2,
            period: 32,
        }
    }
}

#[derive(Clone, Debug)]
struct Round {
    graph: Graph,
    matrix: MixingMatrix,
    deviation: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate {
    /// Largest `‖W − P‖₂` over the certified rounds.
    pub rho_max: f64,
    pub chi: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConsensusTrace {
    pub rounds_used: usize,
    pub pre_error: f64,
    pub post_error: f64,
    pub matrices: Range<u64>,
}

/// Deterministic sequence of mixing matrices `W^0, W^1, …`.
///
/// Round `k` uses entry `k mod period` of a seeded list of connected
/// graphs. The cursor counts matrices consumed; matrices are never reused
/// within one consensus call and never rewound.
#[derive(Clone, Debug)]
pub struct MixingSchedule {
    m: usize,
    rounds: Vec<Round>,
    certificate: Option<Certificate>,
    cursor: u64,
}

impl MixingSchedule {
    pub fn generate(cfg: &TopologyConfig) -> Result<Self> {
        if cfg.m == 0 {
            return Err(Error::config("network.m", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&cfg.p_drop) {
            return Err(Error::config("network.p_drop", "must lie in [0, 1)"));
        }
        if cfg.period == 0 {
            return Err(Error::config("network.period", "must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let base = match cfg.topology {
            Topology::Complete => Graph::complete(cfg.m),
            Topology::Ring => Graph::ring(cfg.m),
            Topology::Path => Graph::path(cfg.m),
            Topology::RingChords => Graph::ring_with_chords(cfg.m, cfg.chords, &mut rng),
        };
        let graphs = if cfg.p_drop == 0.0 {
            vec![base]
        } else {
            (0..cfg.period)
                .map(|_| base.drop_edges(cfg.p_drop, &mut rng))
                .collect()
        };
        Self::from_graphs(graphs, cfg.lazy)
    }

    /// Cycles through `graphs` with Metropolis weights.
    pub fn from_graphs(graphs: Vec<Graph>, lazy: bool) -> Result<Self> {
        let m = graphs
            .first()
            .ok_or_else(|| Error::Graph("schedule needs at least one graph".into()))?
            .m();
        let rounds = graphs
            .into_iter()
            .map(|graph| {
                if graph.m() != m {
                    return Err(Error::Graph(format!("graph on {} nodes in a schedule of {m}", graph.m())));
                }
                let mut matrix = MixingMatrix::metropolis(&graph);
                if lazy {
                    matrix = matrix.lazy();
                }
                let deviation = matrix.deviation_norm(SPECTRAL_TOL);
                Ok(Round {
                    graph,
                    matrix,
                    deviation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MixingSchedule {
            m,
            rounds,
            certificate: None,
            cursor: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn period(&self) -> usize {
        self.rounds.len()
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    pub fn certificate(&self) -> Option<Certificate> {
        self.certificate
    }

    /// Certified `χ`; `None` until [`certify_chi`](Self::certify_chi) ran.
    pub fn chi(&self) -> Option<f64> {
        self.certificate.map(|c| c.chi)
    }

    /// `1 − χ⁻¹`
    pub fn contraction(&self) -> Option<f64> {
        self.certificate.map(|c| c.rho_max)
    }

    /// `λ = (1 − χ⁻¹)^T`
    pub fn lambda(&self, rounds: usize) -> Option<f64> {
        self.contraction().map(|r| r.powi(rounds as i32))
    }

    fn round(&self, k: u64) -> &Round {
        &self.rounds[(k % self.rounds.len() as u64) as usize]
    }

    pub fn graph_at(&self, k: u64) -> &Graph {
        &self.round(k).graph
    }

    pub fn matrix_at(&self, k: u64) -> &MixingMatrix {
        &self.round(k).matrix
    }

    /// Measures `ρ_max = max ‖W − P‖₂` over the next `sample_count` rounds
    /// (without consuming them) and sets `χ = 1 / (1 − ρ_max)`. Once
    /// certified, every emitted matrix is checked against `ρ_max`.
    pub fn certify_chi(&mut self, sample_count: usize) -> Result<f64> {
        if sample_count == 0 {
            return Err(Error::config("network.certify_samples", "must be at least 1"));
        }
        let mut rho_max = 0.0f64;
        for k in self.cursor..self.cursor + sample_count as u64 {
            let r = self.round(k);
            if !r.graph.is_connected() {
                return Err(Error::Mixing {
                    round: k,
                    reason: "communication graph is disconnected".into(),
                });
            }
            if r.deviation >= 1.0 {
                return Err(Error::Mixing {
                    round: k,
                    reason: format!("‖W − P‖₂ = {} does not contract", r.deviation),
                });
            }
            rho_max = rho_max.max(r.deviation);
        }
        let chi = 1.0 / (1.0 - rho_max);
        self.certificate = Some(Certificate {
            rho_max,
            chi,
            samples: sample_count,
        });
        Ok(chi)
    }

    /// Certifies over one full period, which covers every round.
    pub fn certify_all(&mut self) -> Result<f64> {
        self.certify_chi(self.period())
    }

    fn emit(&mut self) -> Result<&MixingMatrix> {
        let k = self.cursor;
        let idx = (k % self.rounds.len() as u64) as usize;
        if let Some(c) = self.certificate {
            let dev = self.rounds[idx].deviation;
            if dev > c.rho_max {
                return Err(Error::Mixing {
                    round: k,
                    reason: format!("‖W − P‖₂ = {dev} exceeds certified {}", c.rho_max),
                });
            }
        }
        self.cursor += 1;
        Ok(&self.rounds[idx].matrix)
    }

    /// `Consensus(v, T)`: applies the next `T` mixing matrices in order.
    pub fn consensus(
        &mut self,
        v: &StackedVector,
        rounds: usize,
        exec: Exec,
    ) -> Result<(StackedVector, ConsensusTrace)> {
        if v.m() != self.m {
            return Err(Error::shape(format!("{} nodes", self.m), v.m()));
        }
        let start = self.cursor;
        let pre_error = consensus_error(v);
        let mut cur = v.clone();
        let mut next = StackedVector::zeros(v.m(), v.d());
        for _ in 0..rounds {
            let w = self.emit()?;
            w.apply_into(&cur, &mut next, exec);
            std::mem::swap(&mut cur, &mut next);
        }
        let trace = ConsensusTrace {
            rounds_used: rounds,
            pre_error,
            post_error: consensus_error(&cur),
            matrices: start..self.cursor,
        };
        Ok((cur, trace))
    }

    /// One line per round: `round<TAB>i-j i-j …`.
    pub fn write_dump<W: Write>(&self, rounds: Range<u64>, mut out: W) -> std::io::Result<()> {
        for k in rounds {
            write!(out, "{k}\t")?;
            let edges = self.graph_at(k).edges();
            for (n, (i, j)) in edges.iter().enumerate() {
                if n > 0 {
                    write!(out, " ")?;
                }
                write!(out, "{i}-{j}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stacked::project_consensus;
    use rand::Rng;

    fn random_stacked(rng: &mut ChaCha8Rng, m: usize, d: usize) -> StackedVector {
        StackedVector::from_flat(m, d, (0..m * d).map(|_| rng.random_range(-5.0..5.0)).collect()).unwrap()
    }

    #[test]
    fn complete_graph_has_unit_chi() {
        let mut s = MixingSchedule::generate(&TopologyConfig::new(6, Topology::Complete)).unwrap();
        let chi = s.certify_all().unwrap();
        assert!((chi - 1.0).abs() < 1e-6);
    }

    #[test]
    fn static_path_chi() {
        let mut s = MixingSchedule::generate(&TopologyConfig::new(3, Topology::Path)).unwrap();
        let chi = s.certify_chi(5).unwrap();
        assert!((chi - 3.0).abs() < 1e-8);
    }

    #[test]
    fn alternating_graphs() {
        let g1 = Graph::path(4);
        let g2 = Graph::ring(4);
        let n1 = MixingMatrix::metropolis(&g1).deviation_norm(SPECTRAL_TOL);
        let n2 = MixingMatrix::metropolis(&g2).deviation_norm(SPECTRAL_TOL);
        let mut s = MixingSchedule::from_graphs(vec![g1, g2], false).unwrap();
        let chi = s.certify_chi(2).unwrap();
        assert_eq!(chi, 1.0 / (1.0 - n1.max(n2)));
    }

    #[test]
    fn disconnected_round_is_named() {
        let g = Graph::new(4, &[(0, 1), (2, 3)]).unwrap();
        let mut s = MixingSchedule::from_graphs(vec![Graph::ring(4), Graph::ring(4), g], false).unwrap();
        match s.certify_chi(3) {
            Err(Error::Mixing { round, .. }) => assert_eq!(round, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn uncertified_rounds_fail_at_emission() {
        let mut s = MixingSchedule::from_graphs(vec![Graph::complete(5), Graph::path(5)], false).unwrap();
        s.certify_chi(1).unwrap();
        let v = StackedVector::broadcast(&[1.0], 5);
        assert!(s.consensus(&v, 1, Exec::Sequential).is_ok());
        match s.consensus(&v, 1, Exec::Sequential) {
            Err(Error::Mixing { round, .. }) => assert_eq!(round, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_rounds_and_consensus_vectors() {
        let mut cfg = TopologyConfig::new(8, Topology::RingChords);
        cfg.p_drop = 0.3;
        cfg.seed = 5;
        let mut s = MixingSchedule::generate(&cfg).unwrap();
        s.certify_all().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_stacked(&mut rng, 8, 3);
        let (out, trace) = s.consensus(&v, 0, Exec::Sequential).unwrap();
        assert_eq!(out, v);
        assert_eq!(s.cursor(), 0);
        assert_eq!(trace.matrices, 0..0);

        let c = StackedVector::broadcast(&[0.5, -2.0, 3.0], 8);
        let (out, trace) = s.consensus(&c, 9, Exec::Parallel).unwrap();
        assert!(out.dist(&c) < 1e-13);
        assert_eq!(s.cursor(), 9);
        assert_eq!(trace.matrices, 0..9);
    }

    #[test]
    fn mean_preserved_and_contracting() {
        let mut cfg = TopologyConfig::new(12, Topology::Ring);
        cfg.p_drop = 0.25;
        cfg.seed = 3;
        cfg.lazy = true;
        let mut s = MixingSchedule::generate(&cfg).unwrap();
        s.certify_all().unwrap();
        let rho = s.contraction().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for t in [1, 3, 10, 25] {
            let v = random_stacked(&mut rng, 12, 4);
            let (out, trace) = s.consensus(&v, t, Exec::Sequential).unwrap();
            assert!(project_consensus(&out).dist(&project_consensus(&v)) <= 1e-10);
            assert!(trace.post_error <= rho.powi(t as i32) * trace.pre_error + 1e-9);
            assert!(trace.post_error <= trace.pre_error);
        }
    }

    #[test]
    fn dump_format() {
        let s = MixingSchedule::generate(&TopologyConfig::new(3, Topology::Path)).unwrap();
        let mut buf = Vec::new();
        s.write_dump(0..2, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0\t0-1 1-2\n1\t0-1 1-2\n");
    }
}
