//! Stacked vectors: `m` node blocks of dimension `d`, stored contiguously.
//!
//! Arithmetic between stacked vectors of different shape is a programming
//! error and panics; shape checks on user-supplied data happen at the API
//! boundary (see [`StackedVector::from_blocks`]).

use std::fmt;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq)]
pub struct StackedVector {
    m: usize,
    d: usize,
    data: Vec<f64>,
}

impl fmt::Debug for StackedVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.blocks()).finish()
    }
}

impl StackedVector {
    pub fn zeros(m: usize, d: usize) -> Self {
        assert!(m >= 1 && d >= 1, "stacked vector needs m, d >= 1");
        StackedVector {
            m,
            d,
            data: vec![0.0; m * d],
        }
    }

    /// `1 ⊗ y`: every block is a copy of `y`.
    pub fn broadcast(y: &[f64], m: usize) -> Self {
        assert!(m >= 1 && !y.is_empty(), "stacked vector needs m, d >= 1");
        let mut data = Vec::with_capacity(m * y.len());
        for _ in 0..m {
            data.extend_from_slice(y);
        }
        StackedVector { m, d: y.len(), data }
    }

    pub fn from_blocks<B: AsRef<[f64]>>(blocks: &[B]) -> Result<Self> {
        let m = blocks.len();
        if m == 0 {
            return Err(Error::shape("m >= 1", "m = 0"));
        }
        let d = blocks[0].as_ref().len();
        if d == 0 {
            return Err(Error::shape("d >= 1", "d = 0"));
        }
        let mut data = Vec::with_capacity(m * d);
        for (i, b) in blocks.iter().enumerate() {
            let b = b.as_ref();
            if b.len() != d {
                return Err(Error::shape(
                    format!("block {i} of length {d}"),
                    format!("length {}", b.len()),
                ));
            }
            data.extend_from_slice(b);
        }
        Ok(StackedVector { m, d, data })
    }

    pub fn from_flat(m: usize, d: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || d == 0 || data.len() != m * d {
            return Err(Error::shape(
                format!("{m} x {d} entries"),
                format!("{} entries", data.len()),
            ));
        }
        Ok(StackedVector { m, d, data })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn blocks(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.d)
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.m == other.m && self.d == other.d
    }

    fn assert_shape(&self, other: &Self) {
        assert!(
            self.same_shape(other),
            "stacked shape mismatch: ({}, {}) vs ({}, {})",
            self.m,
            self.d,
            other.m,
            other.d
        );
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.assert_shape(other);
        dot(&self.data, &other.data)
    }

    pub fn norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.assert_shape(other);
        dist_sq(&self.data, &other.data).sqrt()
    }

    pub fn scale(&mut self, a: f64) {
        self.data.iter_mut().for_each(|v| *v *= a);
    }

    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.assert_shape(other);
        for (s, o) in self.data.iter_mut().zip(&other.data) {
            *s += a * o;
        }
    }

    /// `a * u + b * v`
    pub fn lincomb(a: f64, u: &Self, b: f64, v: &Self) -> Self {
        u.assert_shape(v);
        let data = u
            .data
            .iter()
            .zip(&v.data)
            .map(|(x, y)| a * x + b * y)
            .collect();
        StackedVector {
            m: u.m,
            d: u.d,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::lincomb(1.0, self, -1.0, other)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::lincomb(1.0, self, 1.0, other)
    }

    /// Block mean `(1/m) Σ_i v_i`, summed in node order.
    pub fn mean_block(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for b in self.blocks() {
            for (acc, v) in mean.iter_mut().zip(b) {
                *acc += v;
            }
        }
        let inv = 1.0 / self.m as f64;
        mean.iter_mut().for_each(|v| *v *= inv);
        mean
    }

    /// Distance to `1 ⊗ y`.
    pub fn dist_to_broadcast(&self, y: &[f64]) -> f64 {
        assert_eq!(y.len(), self.d, "broadcast dimension mismatch");
        self.blocks().map(|b| dist_sq(b, y)).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// The averaging projector `P = (1/m) 1 1ᵀ ⊗ I` onto the consensus set.
pub fn project_consensus(v: &StackedVector) -> StackedVector {
    StackedVector::broadcast(&v.mean_block(), v.m())
}

/// `‖v − P v‖₂`
pub fn consensus_error(v: &StackedVector) -> f64 {
    v.dist_to_broadcast(&v.mean_block())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
