use serde::{Deserialize, Serialize};

use super::{DenseVector, Norm};
use crate::error::{Error, Result};

/// Coordinates below this are lifted before a multiplicative update so the
/// entropy prox never gets stuck on a face of the simplex.
pub const ENTROPY_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    Unconstrained,
    Simplex,
    Box { lo: f64, hi: f64 },
    L2Ball { radius: f64 },
}

impl FeasibleSet {
    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        let v = DenseVector::from_vec_unchecked(x.to_vec());
        let p = project(&v, self);
        v.distance(&p, Norm::L2)
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            FeasibleSet::Unconstrained => true,
            FeasibleSet::Simplex => x.iter().all(|&v| v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol,
            FeasibleSet::Box { lo, hi } => x.iter().all(|&v| v >= lo - tol && v <= hi + tol),
            FeasibleSet::L2Ball { radius } => super::norm(x, Norm::L2) <= radius + tol,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BregmanKind {
    Euclidean,
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub kind: BregmanKind,
    pub set: FeasibleSet,
}

impl Geometry {
    pub fn new(kind: BregmanKind, set: FeasibleSet) -> Result<Self> {
        if kind == BregmanKind::Entropy && set != FeasibleSet::Simplex {
            return Err(Error::Config("entropy geometry requires the probability simplex".into()));
        }
        if let FeasibleSet::Box { lo, hi } = set {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::Config(format!("box bounds out of order: [{lo}, {hi}]")));
            }
        }
        if let FeasibleSet::L2Ball { radius } = set {
            if radius.is_nan() || radius <= 0.0 {
                return Err(Error::Config(format!("ball radius must be positive, got {radius}")));
            }
        }
        Ok(Self { kind, set })
    }

    pub fn euclidean(set: FeasibleSet) -> Self {
        Self { kind: BregmanKind::Euclidean, set }
    }

    pub fn entropy_simplex() -> Self {
        Self { kind: BregmanKind::Entropy, set: FeasibleSet::Simplex }
    }
}

/// Euclidean projection onto `set`.
pub fn project(x: &DenseVector, set: &FeasibleSet) -> DenseVector {
    match set {
        FeasibleSet::Unconstrained => x.clone(),
        FeasibleSet::Simplex => project_simplex(x),
        FeasibleSet::Box { lo, hi } => DenseVector::from_vec_unchecked(x.iter().map(|v| v.clamp(*lo, *hi)).collect()),
        FeasibleSet::L2Ball { radius } => {
            let n = x.norm(Norm::L2);
            if n <= *radius {
                x.clone()
            } else {
                x.scale(radius / n)
            }
        }
    }
}

fn project_simplex(x: &DenseVector) -> DenseVector {
    let mut u: Vec<f64> = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut out: Vec<f64> = x.iter().map(|v| (v - theta).max(0.0)).collect();
    // Clean up rounding so the result sums to one.
    let s: f64 = out.iter().sum();
    if s > 0.0 && s != 1.0 {
        for v in &mut out {
            *v /= s;
        }
    }
    DenseVector::from_vec_unchecked(out)
}

/// `argmin_z <eta * xi, z> + V_r(z)` over the set of `geom`.
pub fn prox_step(r: &DenseVector, xi: &DenseVector, eta: f64, geom: &Geometry) -> Result<DenseVector> {
    if r.dim() != xi.dim() {
        return Err(Error::DimensionMismatch { expected: r.dim(), got: xi.dim() });
    }
    let out = match geom.kind {
        BregmanKind::Euclidean => project(&r.add_scaled(-eta, xi), &geom.set),
        BregmanKind::Entropy => {
            // Work in log space relative to the largest exponent to avoid overflow.
            let logs: Vec<f64> = r.iter().zip(xi.iter()).map(|(&ri, &gi)| ri.max(ENTROPY_FLOOR).ln() - eta * gi).collect();
            let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
            let s: f64 = w.iter().sum();
            DenseVector::from_vec_unchecked(w.into_iter().map(|v| v / s).collect())
        }
    };
    if !out.is_finite() {
        return Err(Error::NonFinite("prox step produced a non-finite point".into()));
    }
    Ok(out)
}
