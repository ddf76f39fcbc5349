//! Accelerated decentralized proximal method with a multi-round consensus
//! subroutine, for composite strongly convex problems
//! `min_{x ∈ Q} (1/m) Σ_i f_i(x) + g(x)` over simulated time-varying networks.
//!
//! Modules, bottom-up: [`stacked`] (node-block vectors and the averaging
//! projector), [`objectives`], [`prox`], [`network`], [`solver`],
//! [`theory`] (numerical certificates for the convergence analysis), and
//! [`harness`] (config files, CSV traces, the CLI driver).

pub mod error;
pub mod exec;
pub mod harness;
pub mod network;
pub mod objectives;
pub mod prox;
pub mod solver;
pub mod stacked;
pub mod theory;

pub use error::{Error, Result};
pub use exec::Exec;
pub use stacked::{consensus_error, project_consensus, StackedVector};
