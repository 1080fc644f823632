//! Value oracles with bounded adversarial noise, the shipped test problems
//! and brute-force reference solvers.

mod game;
mod noise;
mod objective;

pub use game::{exact_gap, make_bilinear_game, Matrix, SaddleObjective, SaddleProblem};
pub use noise::{NoiseKind, NoiseModel};
pub use objective::{brute_force_min, make_simplex_test_problem, Objective, StochasticProblem};

use crate::error::{Error, Result};
use crate::vecspace::RngStream;

/// Anything that can be queried for `f(z, xi)`.
///
/// `xi` is the realization of the randomness in the objective. Deterministic
/// objectives ignore it. The two evaluations of a two-point estimate pass
/// the same `xi`.
pub trait ValueFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, z: &[f64], xi: u64) -> f64;

    /// Euclidean distance from `z` to the feasible set.
    fn domain_distance(&self, z: &[f64]) -> f64;
}

/// A counting, noisy view of a [`ValueFunction`].
///
/// Each worker owns its own oracle. The counter is summed when rounds are
/// aggregated, so nothing here is shared across threads.
pub struct ZerothOrderOracle<'a, F: ValueFunction + ?Sized> {
    f: &'a F,
    noise: &'a NoiseModel,
    noise_rng: RngStream,
    radius: f64,
    check_domain: bool,
    calls: u64,
}

impl<'a, F: ValueFunction + ?Sized> ZerothOrderOracle<'a, F> {
    pub fn new(f: &'a F, noise: &'a NoiseModel, noise_rng: RngStream) -> Self {
        Self { f, noise, noise_rng, radius: 0.0, check_domain: true, calls: 0 }
    }

    /// Allow queries up to Euclidean distance `radius` from the feasible set.
    pub fn with_radius(mut self, radius: f64) -> Self {
        self.radius = radius;
        self
    }

    pub fn without_domain_check(mut self) -> Self {
        self.check_domain = false;
        self
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    pub fn function(&self) -> &'a F {
        self.f
    }

    pub fn noise(&self) -> &'a NoiseModel {
        self.noise
    }

    /// `f(z, xi) + delta(z)`. Counts one call.
    pub fn noisy_value(&mut self, z: &[f64], xi: u64) -> Result<f64> {
        if z.len() != self.f.dim() {
            return Err(Error::DimensionMismatch { expected: self.f.dim(), got: z.len() });
        }
        if self.check_domain {
            let distance = self.f.domain_distance(z);
            if distance > self.radius * (1.0 + 1e-9) + 1e-12 {
                return Err(Error::Domain { distance, radius: self.radius });
            }
        }
        self.calls += 1;
        let v = self.f.value(z, xi) + self.noise.sample(z, &mut self.noise_rng);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("oracle value {v}")));
        }
        Ok(v)
    }
}
