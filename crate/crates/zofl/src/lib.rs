//! Zeroth-order (gradient-free) optimization for nonsmooth stochastic convex
//! problems and convex-concave saddle problems, simulated in a federated
//! architecture of `B` workers, `K` local oracle calls and `N` rounds.
//!
//! The crate is organised bottom-up:
//!
//! * [`vecspace`]: dense vectors, l1/l2 sphere and ball sampling, projections
//!   and prox mappings, reproducible random streams.
//! * [`problems`]: value oracles with bounded adversarial noise, the simplex
//!   test problem, bilinear matrix games and reference solvers.
//! * [`estimators`]: one-point and two-point randomized gradient estimators
//!   under l1 and l2 randomization, batching and Monte-Carlo probes.
//! * [`planner`]: closed-form smoothing radius, Lipschitz, variance, noise and
//!   `(N, K, B, T)` plans.
//! * [`fedsim`]: the round-synchronous execution engine with minibatch and
//!   single-machine accelerated SGD and stochastic mirror prox.
//! * [`cli`]: the configuration-driven `zofl` front end.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod fedsim;
pub mod planner;
pub mod problems;
pub mod vecspace;

pub use error::{Error, Result};
