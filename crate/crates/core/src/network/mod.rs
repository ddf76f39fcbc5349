//! Time-varying communication graphs, Metropolis mixing, certified
//! contraction, and the multi-round gossip subroutine.

mod graph;
mod mixing;
mod schedule;

pub use graph::Graph;
pub use mixing::{metropolis_weights, MixingMatrix};
pub use schedule::{
    Certificate, ConsensusTrace, MixingSchedule, Topology, TopologyConfig, SPECTRAL_TOL,
};
