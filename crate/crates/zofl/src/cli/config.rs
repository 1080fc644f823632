use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimators::Feedback;
use crate::fedsim::FedTopology;
use crate::planner::{Algorithm, ProblemConstants};
use crate::problems::{make_bilinear_game, make_simplex_test_problem, Matrix, NoiseModel, SaddleProblem, StochasticProblem};
use crate::vecspace::{BregmanKind, DenseVector, FeasibleSet, Lp, Norm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `<b, x> + ||x||_inf` on the simplex with `b ~ U[0, 1]^d` from `seed`.
    SimplexTest {
        d: usize,
        #[serde(default)]
        seed: u64,
    },
    /// `||x||^2 / 2` on the l2 ball.
    Quadratic {
        d: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    Linear {
        c: Vec<f64>,
        set: FeasibleSet,
    },
    /// `x^T A y` on simplex x simplex.
    BilinearGame {
        a: Vec<Vec<f64>>,
    },
}

fn one() -> f64 {
    1.0
}

/// One scheme or a list of schemes to run side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Schemes {
    One(Lp),
    Many(Vec<Lp>),
}

impl Default for Schemes {
    fn default() -> Self {
        Schemes::One(Lp::L2)
    }
}

impl Schemes {
    pub fn list(&self) -> Vec<Lp> {
        match self {
            Schemes::One(s) => vec![*s],
            Schemes::Many(v) => v.clone(),
        }
    }
}

/// Overrides for the constants otherwise taken from the problem.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantOverrides {
    /// Only used when no problem is given.
    pub d: Option<usize>,
    pub m: Option<f64>,
    pub m2: Option<f64>,
    pub g: Option<f64>,
    pub r: Option<f64>,
    pub eps: Option<f64>,
    pub p: Option<Lp>,
}

/// Fixed total budget `KN`, split over a list of `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub budget: u64,
    pub b: u64,
    pub k: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSpec {
    Value(f64),
    Named(SigmaRule),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    Planned,
    Measured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    #[default]
    Estimated,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Depth {
    #[default]
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub problem: Option<ProblemSpec>,
    #[serde(default)]
    pub noise: Option<NoiseModel>,
    #[serde(default)]
    pub algorithm: Option<Algorithm>,
    #[serde(default)]
    pub scheme: Schemes,
    #[serde(default = "two_point")]
    pub feedback: Feedback,
    #[serde(default)]
    pub topology: Option<FedTopology>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub constants: ConstantOverrides,
    /// Smoothing radius. Defaults to the planned value.
    #[serde(default)]
    pub gamma: Option<f64>,
    /// Multiplier on the noise-limited branch of the accelerated step.
    #[serde(default)]
    pub c_eta: Option<f64>,
    /// Noise scale used by the accelerated step: the planned bound by
    /// default, a number, or `"measured"` for a Monte-Carlo estimate of the
    /// estimator's root second moment at the start.
    #[serde(default)]
    pub sigma: Option<SigmaSpec>,
    /// Smoothness constant used by the accelerated step, in place of the
    /// smoothed-gradient bound.
    #[serde(default)]
    pub smoothness: Option<f64>,
    /// Fixed SMP step, overriding the formula.
    #[serde(default)]
    pub eta: Option<f64>,
    /// Prox geometry for SMP.
    #[serde(default = "euclidean")]
    pub geometry: BregmanKind,
    #[serde(default)]
    pub operator: OperatorKind,
    /// Starting point. Defaults to the center of the feasible set.
    #[serde(default)]
    pub start: Option<Vec<f64>>,
    #[serde(default = "one_u")]
    pub repeat: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub depth: Depth,
    #[serde(default)]
    pub wall_clock: bool,
}

fn two_point() -> Feedback {
    Feedback::TwoPoint
}

fn euclidean() -> BregmanKind {
    BregmanKind::Euclidean
}

fn one_u() -> u64 {
    1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.topology.is_some() && self.sweep.is_some() {
            return Err(Error::Config("give either topology or sweep, not both".into()));
        }
        if self.repeat == 0 {
            return Err(Error::Config("repeat must be >= 1".into()));
        }
        if let Some(t) = &self.topology {
            t.validate()?;
        }
        if let Some(s) = &self.sweep {
            if s.budget == 0 || s.b == 0 || s.k.is_empty() || s.k.contains(&0) {
                return Err(Error::Config("sweep needs budget, b >= 1 and a non-empty list of K >= 1".into()));
            }
        }
        if self.scheme.list().is_empty() {
            return Err(Error::Config("scheme list is empty".into()));
        }
        if let Some(n) = &self.noise {
            if !n.level.is_finite() || n.level < 0.0 {
                return Err(Error::Config(format!("noise level must be finite and >= 0, got {}", n.level)));
            }
        }
        Ok(())
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    /// `threads` is left out: it never changes results.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(&Self { threads: None, ..self.clone() }).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn algorithm(&self) -> Result<Algorithm> {
        self.algorithm.ok_or_else(|| Error::Config("algorithm is required".into()))
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise.clone().unwrap_or_else(NoiseModel::none)
    }

    pub fn problem_spec(&self) -> Result<&ProblemSpec> {
        self.problem.as_ref().ok_or_else(|| Error::Config("problem is required".into()))
    }
}

/// A built problem of either family.
#[derive(Debug, Clone)]
pub enum BuiltProblem {
    Min(StochasticProblem),
    Saddle(SaddleProblem),
}

impl ProblemSpec {
    pub fn build(&self) -> Result<BuiltProblem> {
        Ok(match self {
            ProblemSpec::SimplexTest { d, seed } => BuiltProblem::Min(make_simplex_test_problem(*d, *seed)?),
            ProblemSpec::Quadratic { d, radius } => {
                if *d == 0 || radius.is_nan() || *radius <= 0.0 {
                    return Err(Error::Config("quadratic needs d >= 1 and radius > 0".into()));
                }
                BuiltProblem::Min(StochasticProblem::quadratic(*d, *radius))
            }
            ProblemSpec::Linear { c, set } => BuiltProblem::Min(StochasticProblem::linear(DenseVector::new(c.clone())?, set.clone())),
            ProblemSpec::BilinearGame { a } => BuiltProblem::Saddle(make_bilinear_game(Matrix::from_rows(a)?)),
        })
    }
}

impl BuiltProblem {
    pub fn dim(&self) -> usize {
        match self {
            BuiltProblem::Min(p) => p.dim(),
            BuiltProblem::Saddle(g) => {
                let (dx, dy) = g.dims();
                dx + dy
            }
        }
    }

    /// Default start: the center of the feasible set.
    pub fn default_start(&self) -> DenseVector {
        match self {
            BuiltProblem::Min(p) => center(&p.set, p.dim()),
            BuiltProblem::Saddle(g) => {
                let (dx, dy) = g.dims();
                DenseVector::concat(&center(&g.set_x, dx), &center(&g.set_y, dy))
            }
        }
    }
}

fn center(set: &FeasibleSet, d: usize) -> DenseVector {
    match set {
        FeasibleSet::Simplex => DenseVector::simplex_center(d),
        FeasibleSet::Box { lo, hi } => DenseVector::filled(d, 0.5 * (lo + hi)),
        FeasibleSet::L2Ball { .. } | FeasibleSet::Unconstrained => DenseVector::zeros(d),
    }
}

fn diameter(set: &FeasibleSet, d: usize) -> Option<f64> {
    match set {
        FeasibleSet::Simplex => Some(2f64.sqrt()),
        FeasibleSet::L2Ball { radius } => Some(2.0 * radius),
        FeasibleSet::Box { lo, hi } => Some((hi - lo) * (d as f64).sqrt()),
        FeasibleSet::Unconstrained => None,
    }
}

/// Planner constants for a minimization problem: metadata from the problem,
/// `R = ||x0 - x*||` when the optimum is known and the set diameter
/// otherwise, then the overrides on top.
pub fn min_constants(p: &StochasticProblem, x0: &DenseVector, o: &ConstantOverrides) -> Result<ProblemConstants> {
    let r = match (&p.x_star, o.r) {
        (_, Some(r)) => r,
        (Some(xs), None) if x0.distance(xs, Norm::L2) > 0.0 => x0.distance(xs, Norm::L2),
        _ => diameter(&p.set, p.dim()).ok_or_else(|| Error::Config("constants.r is required for unbounded sets".into()))?,
    };
    let eps = o.eps.ok_or_else(|| Error::Config("constants.eps is required".into()))?;
    let c =
        ProblemConstants { d: p.dim(), m: o.m.unwrap_or(p.m), m2: o.m2.unwrap_or(p.m2), g: o.g.or(p.g), r, eps, p: o.p.unwrap_or(Lp::L2) };
    c.validate()?;
    Ok(c)
}

/// Per-block constants for a saddle problem. `R` defaults to the diameter of
/// the product set.
pub fn saddle_constants(g: &SaddleProblem, o: &ConstantOverrides) -> Result<(ProblemConstants, ProblemConstants)> {
    let (dx, dy) = g.dims();
    let r = match o.r {
        Some(r) => r,
        None => {
            let a = diameter(&g.set_x, dx).unwrap_or(1.0);
            let b = diameter(&g.set_y, dy).unwrap_or(1.0);
            a.hypot(b)
        }
    };
    let eps = o.eps.ok_or_else(|| Error::Config("constants.eps is required".into()))?;
    let block = |d: usize, m2: f64| {
        let m2 = o.m2.unwrap_or(m2).max(f64::MIN_POSITIVE);
        ProblemConstants { d: d.max(2), m: o.m.unwrap_or(m2), m2, g: o.g, r, eps, p: o.p.unwrap_or(Lp::L2) }
    };
    Ok((block(dx, g.m2_x), block(dy, g.m2_y)))
}
