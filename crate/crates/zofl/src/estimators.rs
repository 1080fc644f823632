//! Randomized gradient-free estimators built on l1 or l2 smoothing.
//!
//! With `e` uniform on the unit sphere of the scheme and `xi` shared between
//! the two evaluations:
//!
//! | scheme | two-point                                   | one-point               |
//! |--------|---------------------------------------------|-------------------------|
//! | L1     | `d/(2g) (f(x+ge) - f(x-ge)) sign(e)`        | `d/g f(x+ge) sign(e)`   |
//! | L2     | `d/(2g) (f(x+ge) - f(x-ge)) e`              | `d/g f(x+ge) e`         |
//!
//! where `g` is the smoothing radius `gamma`.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problems::{SaddleProblem, ValueFunction, ZerothOrderOracle};
use crate::vecspace::{norm, sample_ball, sample_sphere, DenseVector, Lp, Norm, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    OnePoint,
    TwoPoint,
}

impl Feedback {
    /// Oracle calls per direction.
    pub fn calls(self) -> u64 {
        match self {
            Feedback::OnePoint => 1,
            Feedback::TwoPoint => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingConfig {
    pub scheme: Lp,
    pub feedback: Feedback,
    pub gamma: f64,
    /// Primal norm exponent in which the problem is measured. Second moments
    /// are taken in its dual norm.
    pub p: Lp,
}

impl SmoothingConfig {
    pub fn new(scheme: Lp, feedback: Feedback, gamma: f64) -> Result<Self> {
        Self::with_p(scheme, feedback, gamma, scheme)
    }

    pub fn with_p(scheme: Lp, feedback: Feedback, gamma: f64, p: Lp) -> Result<Self> {
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::Config(format!("smoothing radius must be positive, got {gamma}")));
        }
        Ok(Self { scheme, feedback, gamma, p })
    }

    pub fn q(&self) -> f64 {
        self.p.q()
    }

    pub fn dual_norm(&self) -> Norm {
        self.p.dual_norm()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub g: DenseVector,
    pub calls: u64,
}

/// The vector multiplying the finite difference: `sign(e)` or `e`.
fn direction_factor(e: &DenseVector, scheme: Lp) -> DenseVector {
    match scheme {
        Lp::L1 => crate::vecspace::sign_vector(e),
        Lp::L2 => e.clone(),
    }
}

fn check_dim<F: ValueFunction + ?Sized>(oracle: &ZerothOrderOracle<'_, F>, x: &DenseVector) -> Result<()> {
    if x.dim() != oracle.dim() {
        return Err(Error::DimensionMismatch { expected: oracle.dim(), got: x.dim() });
    }
    Ok(())
}

/// Central two-point estimate of the smoothed gradient at `x`.
pub fn two_point_grad<F: ValueFunction + ?Sized>(
    oracle: &mut ZerothOrderOracle<'_, F>,
    x: &DenseVector,
    cfg: &SmoothingConfig,
    rng: &mut RngStream,
) -> Result<GradientSample> {
    check_dim(oracle, x)?;
    let d = x.dim() as f64;
    let xi = rng.next_u64();
    let e = sample_sphere(x.dim(), cfg.scheme, rng);
    let plus = oracle.noisy_value(&x.add_scaled(cfg.gamma, &e), xi)?;
    let minus = oracle.noisy_value(&x.add_scaled(-cfg.gamma, &e), xi)?;
    let coef = d / (2.0 * cfg.gamma) * (plus - minus);
    Ok(GradientSample { g: direction_factor(&e, cfg.scheme).scale(coef), calls: 2 })
}

/// One-point estimate of the smoothed gradient at `x`.
pub fn one_point_grad<F: ValueFunction + ?Sized>(
    oracle: &mut ZerothOrderOracle<'_, F>,
    x: &DenseVector,
    cfg: &SmoothingConfig,
    rng: &mut RngStream,
) -> Result<GradientSample> {
    check_dim(oracle, x)?;
    let d = x.dim() as f64;
    let xi = rng.next_u64();
    let e = sample_sphere(x.dim(), cfg.scheme, rng);
    let value = oracle.noisy_value(&x.add_scaled(cfg.gamma, &e), xi)?;
    let coef = d / cfg.gamma * value;
    Ok(GradientSample { g: direction_factor(&e, cfg.scheme).scale(coef), calls: 1 })
}

/// One sample of the estimator selected by `cfg.feedback`.
pub fn grad_sample<F: ValueFunction + ?Sized>(
    oracle: &mut ZerothOrderOracle<'_, F>,
    x: &DenseVector,
    cfg: &SmoothingConfig,
    rng: &mut RngStream,
) -> Result<GradientSample> {
    match cfg.feedback {
        Feedback::TwoPoint => two_point_grad(oracle, x, cfg, rng),
        Feedback::OnePoint => one_point_grad(oracle, x, cfg, rng),
    }
}

/// Mean of `m` independent samples at the same point.
pub fn batch_grad<F: ValueFunction + ?Sized>(
    oracle: &mut ZerothOrderOracle<'_, F>,
    x: &DenseVector,
    cfg: &SmoothingConfig,
    m: usize,
    rng: &mut RngStream,
) -> Result<GradientSample> {
    if m == 0 {
        return Err(Error::Config("batch size must be at least 1".into()));
    }
    let mut sum = DenseVector::zeros(x.dim());
    let mut calls = 0;
    for _ in 0..m {
        let s = grad_sample(oracle, x, cfg, rng)?;
        sum.axpy(1.0, &s.g);
        calls += s.calls;
    }
    Ok(GradientSample { g: sum.scale(1.0 / m as f64), calls })
}

/// Estimate of `F(z) = (grad_x f, -grad_y f)` for a saddle problem.
///
/// Each block is smoothed with its own configuration and an independent
/// direction. Both blocks move together, so one two-point estimate costs two
/// oracle calls and shares `xi`.
pub fn saddle_operator_estimate(
    oracle: &mut ZerothOrderOracle<'_, SaddleProblem>,
    z: &DenseVector,
    cfg_x: &SmoothingConfig,
    cfg_y: &SmoothingConfig,
    rng: &mut RngStream,
) -> Result<GradientSample> {
    check_dim(oracle, z)?;
    if cfg_x.feedback != cfg_y.feedback {
        return Err(Error::Config("x and y blocks must use the same feedback".into()));
    }
    let (dx, dy) = oracle.function().dims();
    let xi = rng.next_u64();
    let ex = sample_sphere(dx, cfg_x.scheme, rng);
    let ey = sample_sphere(dy, cfg_y.scheme, rng);
    let shift = DenseVector::concat(&ex.scale(cfg_x.gamma), &ey.scale(cfg_y.gamma));
    let (diff, calls, denom) = match cfg_x.feedback {
        Feedback::TwoPoint => {
            let plus = oracle.noisy_value(&z.add(&shift), xi)?;
            let minus = oracle.noisy_value(&z.sub(&shift), xi)?;
            (plus - minus, 2, 2.0)
        }
        Feedback::OnePoint => (oracle.noisy_value(&z.add(&shift), xi)?, 1, 1.0),
    };
    let gx = direction_factor(&ex, cfg_x.scheme).scale(dx as f64 / (denom * cfg_x.gamma) * diff);
    let gy = direction_factor(&ey, cfg_y.scheme).scale(-(dy as f64) / (denom * cfg_y.gamma) * diff);
    Ok(GradientSample { g: DenseVector::concat(&gx, &gy), calls })
}

/// Mean and standard error of a Monte-Carlo average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl McEstimate {
    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for v in samples {
            n += 1;
            let delta = v - mean;
            mean += delta / n as f64;
            m2 += delta * (v - mean);
        }
        let se = if n > 1 { (m2 / (n - 1) as f64 / n as f64).sqrt() } else { f64::INFINITY };
        Self { mean, se, n }
    }
}

/// Monte-Carlo estimate of `f_gamma(x) = E f(x + gamma u)` with `u` uniform
/// in the unit ball of the scheme.
pub fn mc_smoothed_value<F: ValueFunction + ?Sized>(
    f: &F,
    x: &DenseVector,
    cfg: &SmoothingConfig,
    n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::Config("need at least 2 samples".into()));
    }
    if x.dim() != f.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), got: x.dim() });
    }
    let samples = (0..n).map(|_| {
        let xi = rng.next_u64();
        let u = sample_ball(x.dim(), cfg.scheme, rng);
        f.value(&x.add_scaled(cfg.gamma, &u), xi)
    });
    Ok(McEstimate::from_samples(samples.collect::<Vec<_>>()))
}

/// Monte-Carlo estimate of `E ||g||_q^2` for the estimator in `cfg`.
pub fn second_moment_estimate<F: ValueFunction + ?Sized>(
    oracle: &mut ZerothOrderOracle<'_, F>,
    x: &DenseVector,
    cfg: &SmoothingConfig,
    n: usize,
    rng: &mut RngStream,
) -> Result<McEstimate> {
    if n < 2 {
        return Err(Error::Config("need at least 2 samples".into()));
    }
    let q = cfg.dual_norm();
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let s = grad_sample(oracle, x, cfg, rng)?;
        samples.push(norm(&s.g, q).powi(2));
    }
    Ok(McEstimate::from_samples(samples))
}
