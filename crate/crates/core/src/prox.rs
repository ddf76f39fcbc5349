//! The shared composite term `(g, Q)` and its constrained prox operator
//! `argmin_{y ∈ Q} g(y) + ‖y − x‖² / (2γ)`.

use std::fmt;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::stacked::{dist_sq, StackedVector};

#[derive(Clone, Debug, PartialEq)]
pub enum Regularizer {
    Zero,
    L1 { weight: f64 },
    ElasticNet { l1: f64, l2: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    AllSpace,
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl fmt::Display for Regularizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regularizer::Zero => write!(f, "zero"),
            Regularizer::L1 { .. } => write!(f, "l1"),
            Regularizer::ElasticNet { .. } => write!(f, "elastic-net"),
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::AllSpace => write!(f, "all-space"),
            Domain::Box { .. } => write!(f, "box"),
            Domain::Ball { .. } => write!(f, "ball"),
        }
    }
}

impl Regularizer {
    /// `g(x)`, without the indicator of `Q`.
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::ElasticNet { l1, l2 } => {
                l1 * x.iter().map(|v| v.abs()).sum::<f64>() + 0.5 * l2 * x.iter().map(|v| v * v).sum::<f64>()
            }
        }
    }
}

impl Domain {
    pub fn uniform_box(lo: f64, hi: f64, d: usize) -> Self {
        Domain::Box {
            lo: vec![lo; d],
            hi: vec![hi; d],
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Domain::AllSpace => true,
            Domain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol),
            Domain::Ball { center, radius } => dist_sq(x, center).sqrt() <= radius + tol,
        }
    }

    /// Euclidean projection onto the domain.
    pub fn project(&self, x: &mut [f64]) {
        match self {
            Domain::AllSpace => {}
            Domain::Box { lo, hi } => {
                for (v, (l, h)) in x.iter_mut().zip(lo.iter().zip(hi)) {
                    *v = v.clamp(*l, *h);
                }
            }
            Domain::Ball { center, radius } => {
                let r = dist_sq(x, center).sqrt();
                if r > *radius {
                    let s = radius / r;
                    for (v, c) in x.iter_mut().zip(center) {
                        *v = c + s * (*v - c);
                    }
                }
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Domain::AllSpace => None,
            Domain::Box { lo, .. } => Some(lo.len()),
            Domain::Ball { center, .. } => Some(center.len()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompositeTerm {
    reg: Regularizer,
    domain: Domain,
}

impl CompositeTerm {
    /// Accepts only the pairs with a closed-form prox:
    /// `(zero, any)`, `(l1, all-space)`, `(l1, box)`, `(elastic-net, all-space)`.
    pub fn new(reg: Regularizer, domain: Domain) -> Result<Self> {
        match reg {
            Regularizer::Zero => {}
            Regularizer::L1 { weight } => {
                if !(weight >= 0.0 && weight.is_finite()) {
                    return Err(Error::config("problem.l1", "weight must be finite and >= 0"));
                }
            }
            Regularizer::ElasticNet { l1, l2 } => {
                if !(l1 >= 0.0 && l2 >= 0.0 && l1.is_finite() && l2.is_finite()) {
                    return Err(Error::config("problem.l1", "elastic-net weights must be finite and >= 0"));
                }
            }
        }
        match &domain {
            Domain::AllSpace => {}
            Domain::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::config("problem.box", "bounds must have equal, nonzero length"));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::config("problem.box", "lower bound exceeds upper bound"));
                }
            }
            Domain::Ball { center, radius } => {
                if center.is_empty() || !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(Error::config("problem.ball_radius", "radius must be finite and >= 0"));
                }
            }
        }
        let supported = matches!(
            (&reg, &domain),
            (Regularizer::Zero, _)
                | (Regularizer::L1 { .. }, Domain::AllSpace | Domain::Box { .. })
                | (Regularizer::ElasticNet { .. }, Domain::AllSpace)
        );
        if !supported {
            return Err(Error::UnsupportedPair {
                regularizer: reg.to_string(),
                domain: domain.to_string(),
            });
        }
        Ok(CompositeTerm { reg, domain })
    }

    pub fn zero() -> Self {
        CompositeTerm {
            reg: Regularizer::Zero,
            domain: Domain::AllSpace,
        }
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.reg
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Rejects a domain whose dimension differs from `d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        match self.domain.dim() {
            Some(k) if k != d => Err(Error::shape(format!("domain of dimension {d}"), k)),
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.reg.value(x)
    }

    pub fn prox_point(&self, gamma: f64, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.prox_in_place(gamma, &mut out);
        out
    }

    pub fn prox_in_place(&self, gamma: f64, x: &mut [f64]) {
        debug_assert!(gamma > 0.0);
        match self.reg {
            Regularizer::Zero => self.domain.project(x),
            Regularizer::L1 { weight } => {
                let t = gamma * weight;
                x.iter_mut().for_each(|v| *v = soft_threshold(*v, t));
                // separable and axis-aligned, so clamping after shrinkage is exact
                self.domain.project(x);
            }
            Regularizer::ElasticNet { l1, l2 } => {
                let t = gamma * l1;
                let s = 1.0 / (1.0 + gamma * l2);
                x.iter_mut().for_each(|v| *v = soft_threshold(*v, t) * s);
            }
        }
    }

    /// Blockwise prox of `G(x) = Σ g(x_i)` over `Q^m`.
    pub fn prox_stacked(&self, gamma: f64, x: &StackedVector, exec: Exec) -> StackedVector {
        let mut out = x.clone();
        self.prox_stacked_in_place(gamma, &mut out, exec);
        out
    }

    pub fn prox_stacked_in_place(&self, gamma: f64, x: &mut StackedVector, exec: Exec) {
        let d = x.d();
        exec.for_each_chunk(x.as_mut_slice(), d, |_, b| self.prox_in_place(gamma, b));
    }
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}
