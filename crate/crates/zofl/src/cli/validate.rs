//! Monte-Carlo checks of the estimator and sampler properties.

use rayon::prelude::*;
use serde::Serialize;

use super::config::Depth;
use crate::error::Result;
use crate::estimators::{grad_sample, mc_smoothed_value, second_moment_estimate, Feedback, SmoothingConfig};
use crate::planner::{max_noise, second_moment_bound, smoothing_gamma, Algorithm, ProblemConstants};
use crate::problems::{make_simplex_test_problem, NoiseModel, StochasticProblem, ZerothOrderOracle};
use crate::vecspace::{sample_sphere, DenseVector, FeasibleSet, Lp, RngStream, StreamId};

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Check {
    fn le(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self { name: name.into(), measured, bound, pass: measured <= bound }
    }

    pub fn line(&self) -> String {
        format!("{} {} measured={:.6e} bound={:.6e}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.measured, self.bound)
    }
}

fn stream(seed: u64, tag: u64) -> RngStream {
    RngStream::new(seed, StreamId::new(tag, 0, 7))
}

fn scheme_name(s: Lp) -> &'static str {
    match s {
        Lp::L1 => "l1",
        Lp::L2 => "l2",
    }
}

fn feedback_name(f: Feedback) -> &'static str {
    match f {
        Feedback::OnePoint => "one_point",
        Feedback::TwoPoint => "two_point",
    }
}

fn unit_random(d: usize, rng: &mut RngStream) -> DenseVector {
    sample_sphere(d, Lp::L2, rng)
}

/// Largest deviation of `||e||_p` from 1 over `n` sphere draws.
pub fn sphere_norm(scheme: Lp, d: usize, n: usize, seed: u64) -> Check {
    let mut rng = stream(seed, 1);
    let worst = (0..n).map(|_| (sample_sphere(d, scheme, &mut rng).norm(scheme.norm()) - 1.0).abs()).fold(0.0, f64::max);
    Check::le(format!("sphere_norm[{}]", scheme_name(scheme)), worst, 1e-12)
}

/// `d E[e_1^2] = 1` on the l2 sphere, as a z-score.
pub fn isotropy(d: usize, n: usize, seed: u64) -> Check {
    let mut rng = stream(seed, 2);
    let est = crate::estimators::McEstimate::from_samples((0..n).map(|_| d as f64 * sample_sphere(d, Lp::L2, &mut rng)[0].powi(2)));
    Check::le("isotropy[l2]", ((est.mean - 1.0) / est.se).abs(), 4.0)
}

/// `||mean(g) - c||_2` in units of the standard error, for `f = <c, x>`.
pub fn unbiasedness(scheme: Lp, feedback: Feedback, d: usize, n: usize, seed: u64) -> Result<Check> {
    let mut rng = stream(seed, 3);
    let c = unit_random(d, &mut rng).scale(2.0);
    let problem = StochasticProblem::linear(c.clone(), FeasibleSet::Unconstrained);
    let noise = NoiseModel::none();
    let mut oracle = ZerothOrderOracle::new(&problem, &noise, stream(seed, 4));
    let cfg = SmoothingConfig::new(scheme, feedback, 0.1)?;
    let x = DenseVector::filled(d, 0.01);
    let mut mean = vec![0.0; d];
    let mut m2 = vec![0.0; d];
    for i in 0..n {
        let g = grad_sample(&mut oracle, &x, &cfg, &mut rng)?.g;
        for j in 0..d {
            let delta = g[j] - mean[j];
            mean[j] += delta / (i + 1) as f64;
            m2[j] += delta * (g[j] - mean[j]);
        }
    }
    let se = (m2.iter().sum::<f64>() / (n - 1) as f64 / n as f64).sqrt();
    let err = mean.iter().zip(c.iter()).map(|(m, c)| (m - c).powi(2)).sum::<f64>().sqrt();
    Ok(Check::le(format!("unbiased[{},{}]", scheme_name(scheme), feedback_name(feedback)), err / se, 3.0))
}

/// Worst violation of `f(x) <= f_gamma(x) <= f(x) + c gamma M2` on the
/// simplex test problem, in standard errors. `c = 1` for l2 and `2/sqrt(d)`
/// for l1.
pub fn sandwich(scheme: Lp, d: usize, points: usize, n: usize, seed: u64) -> Result<Check> {
    let p = make_simplex_test_problem(d, seed)?;
    let gamma = 0.05;
    let cfg = SmoothingConfig::new(scheme, Feedback::TwoPoint, gamma)?;
    let width = match scheme {
        Lp::L2 => gamma * p.m2,
        Lp::L1 => 2.0 / (d as f64).sqrt() * gamma * p.m2,
    };
    let worst = (0..points as u64)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let mut rng = stream(seed, 100 + i);
            let raw: Vec<f64> = (0..d).map(|_| -rng.uniform_open().ln()).collect();
            let s: f64 = raw.iter().sum();
            let x = DenseVector::new(raw.into_iter().map(|v| v / s).collect())?;
            let f = p.f(&x);
            let est = mc_smoothed_value(&p, &x, &cfg, n, &mut rng)?;
            let below = (f - est.mean) / est.se;
            let above = (est.mean - f - width) / est.se;
            Ok(below.max(above))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Check::le(format!("smoothing_sandwich[{}]", scheme_name(scheme)), worst, 3.0))
}

/// Measured `E||g||_q^2` minus 3 standard errors against the bound, at the
/// center of the simplex test problem. `p = 1` for l1 and `p = 2` for l2.
/// Noise is uniform at `noise_frac * Delta_max`.
pub fn second_moment(scheme: Lp, feedback: Feedback, d: usize, noise_frac: f64, n: usize, seed: u64) -> Result<Check> {
    let p = make_simplex_test_problem(d, seed)?;
    let p_norm = scheme;
    let c = ProblemConstants::new(d, p.m, p.m2, 2f64.sqrt(), 0.1).with_p(p_norm).with_g(p.g.unwrap_or(1.0));
    let gamma = smoothing_gamma(&c, scheme);
    let delta = noise_frac * max_noise(&c, Algorithm::MbAsgd, scheme, feedback);
    let noise = NoiseModel::uniform(delta);
    let mut oracle = ZerothOrderOracle::new(&p, &noise, stream(seed, 5)).without_domain_check();
    let cfg = SmoothingConfig::with_p(scheme, feedback, gamma, p_norm)?;
    let est = second_moment_estimate(&mut oracle, &DenseVector::simplex_center(d), &cfg, n, &mut stream(seed, 6))?;
    let bound = second_moment_bound(p_norm, d, scheme, feedback, p.m2, p.g, gamma, delta)?;
    Ok(Check::le(
        format!("second_moment[{},{},d={d},delta={delta:.2e}]", scheme_name(scheme), feedback_name(feedback)),
        est.mean - 3.0 * est.se,
        bound,
    ))
}

/// Slope of the estimator bias along a random unit direction against the
/// noise level, from an adversary that pushes along that direction.
///
/// Returns the fitted slope and the reference scale `d Delta/gamma` (l1) or
/// `sqrt(d) Delta/gamma` (l2) per unit `Delta`.
pub fn bias_slope(scheme: Lp, d: usize, gamma: f64, levels: &[f64], n: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = stream(seed, 8);
    let c = unit_random(d, &mut rng);
    let r = unit_random(d, &mut rng);
    let problem = StochasticProblem::linear(c, FeasibleSet::Unconstrained);
    let x = DenseVector::zeros(d);
    let cfg = SmoothingConfig::new(scheme, Feedback::TwoPoint, gamma)?;
    let mean_along = |delta: f64| -> Result<f64> {
        let noise = NoiseModel::directional(delta, r.clone(), x.clone(), scheme);
        let mut oracle = ZerothOrderOracle::new(&problem, &noise, stream(seed, 9));
        let mut dirs = stream(seed, 10);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += grad_sample(&mut oracle, &x, &cfg, &mut dirs)?.g.dot(&r);
        }
        Ok(acc / n as f64)
    };
    let base = mean_along(0.0)?;
    let bias: Vec<f64> = levels.par_iter().map(|&l| Ok(mean_along(l)? - base)).collect::<Result<_>>()?;
    let k = levels.len() as f64;
    let mx = levels.iter().sum::<f64>() / k;
    let my = bias.iter().sum::<f64>() / k;
    let sxy: f64 = levels.iter().zip(&bias).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = levels.iter().map(|x| (x - mx).powi(2)).sum();
    let scale = match scheme {
        Lp::L1 => d as f64 / gamma,
        Lp::L2 => (d as f64).sqrt() / gamma,
    };
    Ok((sxy / sxx, scale))
}

pub const BIAS_LEVELS: [f64; 6] = [0.0, 1e-5, 3e-5, 1e-4, 3e-4, 1e-3];

fn bias_check(scheme: Lp, n: usize, seed: u64) -> Result<Check> {
    let (slope, scale) = bias_slope(scheme, 50, 0.01, &BIAS_LEVELS, n, seed)?;
    let ratio = slope / scale;
    // Within a factor 3 either way.
    let off = ratio.max(1e-300).ln().abs();
    Ok(Check { name: format!("bias_slope_ratio[{}]", scheme_name(scheme)), measured: ratio, bound: 3.0, pass: off <= 3f64.ln() })
}

/// Every check at the sample size of `depth`.
pub fn run_suite(depth: Depth, seed: u64) -> Result<Vec<Check>> {
    let (n, points) = match depth {
        Depth::Quick => (10_000, 5),
        Depth::Full => (100_000, 20),
    };
    let schemes = [Lp::L1, Lp::L2];
    let feedbacks = [Feedback::TwoPoint, Feedback::OnePoint];
    let mut checks = vec![sphere_norm(Lp::L1, 50, 1000, seed), sphere_norm(Lp::L2, 50, 1000, seed), isotropy(20, n, seed)];

    let mut jobs: Vec<Box<dyn Fn() -> Result<Check> + Send + Sync>> = Vec::new();
    for s in schemes {
        for f in feedbacks {
            jobs.push(Box::new(move || unbiasedness(s, f, 50, n, seed)));
        }
        jobs.push(Box::new(move || sandwich(s, 100, points, n, seed)));
        for f in feedbacks {
            for d in [10, 100] {
                for frac in [0.0, 0.5] {
                    jobs.push(Box::new(move || second_moment(s, f, d, frac, n, seed)));
                }
            }
        }
        jobs.push(Box::new(move || bias_check(s, n, seed)));
    }
    checks.extend(jobs.par_iter().map(|j| j()).collect::<Result<Vec<_>>>()?);
    Ok(checks)
}
