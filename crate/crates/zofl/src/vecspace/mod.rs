//! Dense vector arithmetic, norms, direction sampling and prox mappings.

mod geometry;
mod rng;
mod sampling;

pub use geometry::{project, prox_step, BregmanKind, FeasibleSet, Geometry, ENTROPY_FLOOR};
pub(crate) use rng::splitmix64;
pub use rng::{RngStream, StreamId};
pub use sampling::{sample_ball, sample_sphere, sign_vector};

use serde::{Deserialize, Serialize};
use std::ops::{Deref, Index};

use crate::error::{Error, Result};

/// The two unit-ball geometries used for randomization, and the exponent `p`
/// of the primal norm (`q` is its dual).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Lp {
    L1,
    L2,
}

impl Lp {
    pub fn p(self) -> f64 {
        match self {
            Lp::L1 => 1.0,
            Lp::L2 => 2.0,
        }
    }

    /// Dual exponent, `1/p + 1/q = 1`. Infinite for `p = 1`.
    pub fn q(self) -> f64 {
        match self {
            Lp::L1 => f64::INFINITY,
            Lp::L2 => 2.0,
        }
    }

    pub fn norm(self) -> Norm {
        match self {
            Lp::L1 => Norm::L1,
            Lp::L2 => Norm::L2,
        }
    }

    /// Norm in which gradients are measured for this primal exponent.
    pub fn dual_norm(self) -> Norm {
        match self {
            Lp::L1 => Norm::Inf,
            Lp::L2 => Norm::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

/// A point or direction in `R^d`. Length is fixed at construction and all
/// components are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(components: Vec<f64>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::Config("vector dimension must be at least 1".into()));
        }
        if let Some(i) = components.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("component {i} is {}", components[i])));
        }
        Ok(Self(components))
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![0.0; d])
    }

    pub fn filled(d: usize, value: f64) -> Self {
        Self(vec![value; d])
    }

    /// Uniform point `1/d` of the probability simplex.
    pub fn simplex_center(d: usize) -> Self {
        Self::filled(d, 1.0 / d as f64)
    }

    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        Self(v)
    }

    /// Wraps a vector without validation. Callers guarantee finiteness.
    pub(crate) fn from_vec_unchecked(components: Vec<f64>) -> Self {
        debug_assert!(components.iter().all(|v| v.is_finite()));
        Self(components)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub fn norm(&self, p: Norm) -> f64 {
        norm(&self.0, p)
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot: dimension mismatch");
        dot(&self.0, &other.0)
    }

    pub fn add(&self, other: &DenseVector) -> DenseVector {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &DenseVector) -> DenseVector {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> DenseVector {
        DenseVector(self.0.iter().map(|v| v * s).collect())
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &DenseVector) -> DenseVector {
        self.zip_with(other, |a, b| a + s * b)
    }

    /// In-place `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &DenseVector) {
        assert_eq!(self.dim(), other.dim(), "axpy: dimension mismatch");
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += s * b;
        }
    }

    /// Convex combination `(1 - t) * self + t * other`.
    pub fn lerp(&self, t: f64, other: &DenseVector) -> DenseVector {
        self.zip_with(other, |a, b| (1.0 - t) * a + t * b)
    }

    pub fn distance(&self, other: &DenseVector, p: Norm) -> f64 {
        self.sub(other).norm(p)
    }

    fn zip_with(&self, other: &DenseVector, f: impl Fn(f64, f64) -> f64) -> DenseVector {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        DenseVector(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    /// Concatenation of two blocks, used for `z = (x, y)`.
    pub fn concat(a: &DenseVector, b: &DenseVector) -> DenseVector {
        let mut v = Vec::with_capacity(a.dim() + b.dim());
        v.extend_from_slice(&a.0);
        v.extend_from_slice(&b.0);
        DenseVector(v)
    }

    pub fn split_at(&self, mid: usize) -> (DenseVector, DenseVector) {
        let (a, b) = self.0.split_at(mid);
        (DenseVector(a.to_vec()), DenseVector(b.to_vec()))
    }
}

impl Deref for DenseVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for DenseVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        DenseVector::new(v)
    }
}

pub fn norm(x: &[f64], p: Norm) -> f64 {
    match p {
        Norm::L1 => x.iter().map(|v| v.abs()).sum(),
        Norm::L2 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Norm::Inf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
