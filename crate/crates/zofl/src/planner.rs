//! Closed-form parameter plans: smoothing radius, Lipschitz and variance
//! constants, tolerable noise and the `(N, K, B, T)` schedule of each
//! federated algorithm.
//!
//! Everything here is a pure function of [`ProblemConstants`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::Feedback;
use crate::vecspace::Lp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Minibatch accelerated SGD: one step per round on a batch of `B K`.
    MbAsgd,
    /// Single-machine accelerated SGD: one worker, `N K` sequential steps.
    SmAsgd,
    /// Local AC-SA. Planned only.
    LocalAcsa,
    /// Federated accelerated SGD. Planned only.
    FedAc,
    /// Minibatch stochastic mirror prox.
    MbSmp,
    /// Single-machine stochastic mirror prox.
    SmSmp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] =
        [Algorithm::MbAsgd, Algorithm::SmAsgd, Algorithm::LocalAcsa, Algorithm::FedAc, Algorithm::MbSmp, Algorithm::SmSmp];

    /// Whether the engine can run it.
    pub fn executable(self) -> bool {
        !matches!(self, Algorithm::LocalAcsa | Algorithm::FedAc)
    }

    pub fn is_saddle(self) -> bool {
        matches!(self, Algorithm::MbSmp | Algorithm::SmSmp)
    }
}

/// `d`, Lipschitz constants `M` and `M2`, value bound `G`, distance scale
/// `R`, target accuracy `eps`, and the primal exponent `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConstants {
    pub d: usize,
    pub m: f64,
    pub m2: f64,
    #[serde(default)]
    pub g: Option<f64>,
    pub r: f64,
    pub eps: f64,
    #[serde(default = "default_p")]
    pub p: Lp,
}

fn default_p() -> Lp {
    Lp::L2
}

impl ProblemConstants {
    pub fn new(d: usize, m: f64, m2: f64, r: f64, eps: f64) -> Self {
        Self { d, m, m2, g: None, r, eps, p: Lp::L2 }
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = Some(g);
        self
    }

    pub fn with_p(mut self, p: Lp) -> Self {
        self.p = p;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Config(format!("d must be at least 2, got {}", self.d)));
        }
        for (name, v) in [("M", self.m), ("M2", self.m2), ("R", self.r), ("eps", self.eps)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if let Some(g) = self.g {
            if !g.is_finite() || g <= 0.0 {
                return Err(Error::Config(format!("G must be positive and finite, got {g}")));
            }
        }
        Ok(())
    }

    fn require_g(&self) -> Result<f64> {
        self.g.ok_or_else(|| Error::Config("one-point feedback needs the value bound G".into()))
    }

    /// Plans collapse to a single step when `eps >= M2 R`.
    pub fn degenerate(&self) -> bool {
        self.eps >= self.m2 * self.r
    }
}

fn d_pow(d: usize, e: f64) -> f64 {
    (d as f64).powf(e)
}

/// `min{q, ln d}` with `q = inf` for `p = 1`.
fn min_q_ln(p: Lp, d: usize) -> f64 {
    p.q().min((d as f64).ln())
}

/// Second-moment constant of the estimator.
pub fn kappa(p: Lp, d: usize, scheme: Lp, feedback: Feedback) -> Result<f64> {
    if d < 2 {
        return Err(Error::Unsupported(format!("kappa needs d >= 2, got {d}")));
    }
    let pp = p.p();
    Ok(match (scheme, feedback) {
        (Lp::L1, Feedback::TwoPoint) => 48.0 * (1.0 + 2f64.sqrt()).powi(2) * d_pow(d, 2.0 - 2.0 / pp),
        (Lp::L2, Feedback::TwoPoint) => 2f64.sqrt() * min_q_ln(p, d) * d_pow(d, 2.0 - 2.0 / pp),
        (Lp::L1, Feedback::OnePoint) => d_pow(d, 4.0 - 2.0 / pp),
        (Lp::L2, Feedback::OnePoint) => min_q_ln(p, d) * d_pow(d, 3.0 - 2.0 / pp),
    })
}

/// Upper bound on `E ||g||_q^2` at noise level `delta` and radius `gamma`.
///
/// For l2 two-point feedback two forms of the constant are in circulation,
/// `sqrt(2) min{q, ln d} d^(2 - 2/p)` applied to `M2^2 + d^2 D^2/(sqrt(2) g^2)`
/// and `sqrt(2) min{q, ln d} d^(2/q - 1)` applied to `d M2^2 + d^2 D^2/g^2`.
/// The larger one is returned.
#[allow(clippy::too_many_arguments)]
pub fn second_moment_bound(
    p: Lp,
    d: usize,
    scheme: Lp,
    feedback: Feedback,
    m2: f64,
    g: Option<f64>,
    gamma: f64,
    delta: f64,
) -> Result<f64> {
    let k = kappa(p, d, scheme, feedback)?;
    let df = d as f64;
    let ratio = (df * delta / gamma).powi(2);
    Ok(match (scheme, feedback) {
        (Lp::L1, Feedback::TwoPoint) => k * (m2 * m2 + ratio / (12.0 * (1.0 + 2f64.sqrt()).powi(2))),
        (Lp::L2, Feedback::TwoPoint) => {
            let stated = k * (m2 * m2 + ratio / 2f64.sqrt());
            let alt_k = 2f64.sqrt() * min_q_ln(p, d) * df.powf(2.0 / p.q() - 1.0);
            let alt = alt_k * (df * m2 * m2 + ratio);
            stated.max(alt)
        }
        (_, Feedback::OnePoint) => {
            let g = g.ok_or_else(|| Error::Config("one-point bound needs G".into()))?;
            k * (g * g + delta * delta) / (gamma * gamma)
        }
    })
}

/// Smoothing radius giving `eps`-accuracy.
pub fn smoothing_gamma(c: &ProblemConstants, scheme: Lp) -> f64 {
    match scheme {
        Lp::L1 => (c.d as f64).sqrt() * c.eps / (4.0 * c.m2),
        Lp::L2 => c.eps / (2.0 * c.m2),
    }
}

/// Lipschitz constant of the smoothed gradient at the planned radius.
pub fn grad_lipschitz(c: &ProblemConstants, scheme: Lp) -> f64 {
    let gamma = smoothing_gamma(c, scheme);
    let d = c.d as f64;
    match scheme {
        Lp::L1 => d * c.m / (2.0 * gamma),
        Lp::L2 => d.sqrt() * c.m / gamma,
    }
}

/// Variance bound of the estimator at the planned radius.
pub fn sigma_sq_bound(c: &ProblemConstants, scheme: Lp, feedback: Feedback) -> Result<f64> {
    let (d, p) = (c.d, c.p.p());
    let m22 = c.m2 * c.m2;
    Ok(match (scheme, feedback) {
        (Lp::L1, Feedback::TwoPoint) => 48.0 * (1.0 + 2f64.sqrt()).powi(2) * d_pow(d, 2.0 - 2.0 / p) * m22,
        (Lp::L2, Feedback::TwoPoint) => 2.0 * 2f64.sqrt() * min_q_ln(c.p, d) * d_pow(d, 2.0 - 2.0 / p) * m22,
        (Lp::L1, Feedback::OnePoint) => {
            let g = c.require_g()?;
            32.0 * d_pow(d, 3.0 - 2.0 / p) * g * g * m22 / (c.eps * c.eps)
        }
        (Lp::L2, Feedback::OnePoint) => {
            let g = c.require_g()?;
            8.0 * min_q_ln(c.p, d) * d_pow(d, 3.0 - 2.0 / p) * g * g * m22 / (c.eps * c.eps)
        }
    })
}

/// Divisor `c` in `Delta_max = eps^2 / (c sqrt(d) M2 R)`.
pub fn noise_divisor(algorithm: Algorithm, scheme: Lp, feedback: Feedback) -> f64 {
    use Algorithm::*;
    match (scheme, feedback) {
        (Lp::L1, Feedback::TwoPoint) => 24.0,
        _ => match algorithm {
            MbAsgd | SmAsgd | LocalAcsa => 12.0,
            FedAc => 16.0,
            MbSmp | SmSmp => 8.0,
        },
    }
}

/// Largest noise level for which the plan still reaches `eps`.
pub fn max_noise(c: &ProblemConstants, algorithm: Algorithm, scheme: Lp, feedback: Feedback) -> f64 {
    c.eps * c.eps / (noise_divisor(algorithm, scheme, feedback) * (c.d as f64).sqrt() * c.m2 * c.r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FedPlan {
    pub algorithm: Algorithm,
    pub scheme: Lp,
    pub feedback: Feedback,
    pub p: Lp,
    pub gamma: f64,
    pub l_f_gamma: f64,
    pub sigma_sq: f64,
    pub kappa: f64,
    pub delta_max: f64,
    pub n: u64,
    pub k: u64,
    pub b: u64,
    pub t: u64,
    /// False for algorithms that are planned but not run by the engine.
    pub executable: bool,
    /// Set when `eps >= M2 R`.
    pub degenerate: bool,
}

fn count(x: f64) -> Result<u64> {
    if !x.is_finite() {
        return Err(Error::NonFinite(format!("plan count {x}")));
    }
    Ok(x.ceil().max(1.0) as u64)
}

/// The `(N, K, B)` schedule and attached constants for `algorithm`.
pub fn plan(algorithm: Algorithm, c: &ProblemConstants, scheme: Lp, feedback: Feedback) -> Result<FedPlan> {
    c.validate()?;
    let k_const = kappa(c.p, c.d, scheme, feedback)?;
    let sigma_sq = sigma_sq_bound(c, scheme, feedback)?;
    let d = c.d as f64;
    let r2 = c.r * c.r;
    let eps2 = c.eps * c.eps;

    // kappa M2^2 R^2 / eps^2, or its one-point analogue with G^2 / eps^2.
    let work = match feedback {
        Feedback::TwoPoint => k_const * c.m2 * c.m2 * r2 / eps2,
        Feedback::OnePoint => {
            let g = c.require_g()?;
            k_const * c.m2 * c.m2 * g * g * r2 / (eps2 * eps2)
        }
    };
    // Multipliers of `work` for the accelerated and mirror-prox families.
    let (acc_mult, smp_mult) = match feedback {
        Feedback::TwoPoint => (1152.0, 1568.0),
        Feedback::OnePoint => (2304.0, 3136.0),
    };
    let c_n = match (scheme, feedback) {
        (Lp::L1, Feedback::TwoPoint) => 4.0 * 6f64.sqrt(),
        _ => 4.0 * 3f64.sqrt(),
    };
    let rounds = c_n * d.powf(0.25) * (c.m * c.m2).sqrt() * c.r / c.eps;
    let l_f_gamma = grad_lipschitz(c, scheme);

    let (n, k, b) = match algorithm {
        Algorithm::MbAsgd => {
            let n = count(rounds)?;
            (n, 1, count(acc_mult * work / n as f64)?)
        }
        Algorithm::SmAsgd => (1, count(acc_mult * work)?, 1),
        Algorithm::LocalAcsa => {
            let k = count(rounds)?;
            (1, k, count(acc_mult * work / k as f64)?)
        }
        Algorithm::FedAc => {
            // N >= 8 L^(1/3) s^(2/3) R^(4/3) / (K^(1/3) eps) with K = 64 s^2 R^2 / (N eps^2)
            // solves to N >= R sqrt(8 L / eps).
            let s2 = match feedback {
                Feedback::TwoPoint => 2.0 * k_const * c.m2 * c.m2,
                Feedback::OnePoint => 4.0 * k_const * c.m2 * c.m2 * c.require_g()?.powi(2) / eps2,
            };
            let n = count(c.r * (8.0 * l_f_gamma / c.eps).sqrt())?;
            (n, count(64.0 * s2 * r2 / (n as f64 * eps2))?, 1)
        }
        Algorithm::MbSmp => (1, 1, count(smp_mult * work)?),
        Algorithm::SmSmp => (1, count(smp_mult * work)?, 1),
    };
    let t = n.checked_mul(k).and_then(|v| v.checked_mul(b)).ok_or_else(|| Error::Config("plan overflows u64".into()))?;
    Ok(FedPlan {
        algorithm,
        scheme,
        feedback,
        p: c.p,
        gamma: smoothing_gamma(c, scheme),
        l_f_gamma,
        sigma_sq,
        kappa: k_const,
        delta_max: max_noise(c, algorithm, scheme, feedback),
        n,
        k,
        b,
        t,
        executable: algorithm.executable(),
        degenerate: c.degenerate(),
    })
}
