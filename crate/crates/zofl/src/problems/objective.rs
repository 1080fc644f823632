use serde::{Deserialize, Serialize};

use super::ValueFunction;
use crate::error::{Error, Result};
use crate::vecspace::{project, DenseVector, FeasibleSet, Norm, RngStream, StreamId};

/// Lane used for drawing problem data, kept apart from optimizer streams.
const PROBLEM_LANE: u64 = 0x5052_4f42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// `<b, x> + ||x||_inf`.
    SimplexTest {
        b: DenseVector,
    },
    /// `<c, x>`.
    Linear {
        c: DenseVector,
    },
    /// `||x||_2^2 / 2`.
    Quadratic {
        d: usize,
    },
    Constant {
        d: usize,
        value: f64,
    },
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::SimplexTest { b } => b.dim(),
            Objective::Linear { c } => c.dim(),
            Objective::Quadratic { d } | Objective::Constant { d, .. } => *d,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::SimplexTest { b } => crate::vecspace::dot(b, x) + crate::vecspace::norm(x, Norm::Inf),
            Objective::Linear { c } => crate::vecspace::dot(c, x),
            Objective::Quadratic { .. } => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Objective::Constant { value, .. } => *value,
        }
    }

    /// One element of the subdifferential at `x`.
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Objective::SimplexTest { b } => {
                let mut g = b.to_vec();
                let (j, _) = x
                    .iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bj, bv), (j, v)| if v.abs() > bv { (j, v.abs()) } else { (bj, bv) });
                g[j] += if x[j] >= 0.0 { 1.0 } else { -1.0 };
                g
            }
            Objective::Linear { c } => c.to_vec(),
            Objective::Quadratic { .. } => x.to_vec(),
            Objective::Constant { d, .. } => vec![0.0; *d],
        }
    }
}

/// A stochastic objective `f(x, xi)` on a feasible set, with the Lipschitz
/// metadata the planner needs.
///
/// `m` bounds the Lipschitz constant, `m2` its second moment and `g` the
/// magnitude of values (needed for one-point feedback). All shipped
/// objectives are deterministic and ignore `xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticProblem {
    pub objective: Objective,
    pub set: FeasibleSet,
    pub m: f64,
    pub m2: f64,
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_star: Option<DenseVector>,
}

impl StochasticProblem {
    pub fn linear(c: DenseVector, set: FeasibleSet) -> Self {
        let m = c.norm(Norm::L2);
        let g = set_radius(&set).map(|r| c.norm(Norm::L2) * r);
        Self { objective: Objective::Linear { c }, set, m, m2: m, g, seed: None, f_star: None, x_star: None }
    }

    /// `||x||^2 / 2` on the l2 ball of `radius`.
    pub fn quadratic(d: usize, radius: f64) -> Self {
        Self {
            objective: Objective::Quadratic { d },
            set: FeasibleSet::L2Ball { radius },
            m: radius,
            m2: radius,
            g: Some(0.5 * radius * radius),
            seed: None,
            f_star: Some(0.0),
            x_star: Some(DenseVector::zeros(d)),
        }
    }

    pub fn constant(d: usize, value: f64, set: FeasibleSet) -> Self {
        Self {
            objective: Objective::Constant { d, value },
            set,
            m: 0.0,
            m2: 0.0,
            g: Some(value.abs()),
            seed: None,
            f_star: Some(value),
            x_star: None,
        }
    }

    /// The simplex test problem for a given `b`, with its exact optimum.
    pub fn simplex_test(b: DenseVector) -> Result<Self> {
        if b.dim() < 2 {
            return Err(Error::Config("simplex test problem needs d >= 2".into()));
        }
        let m2 = b.norm(Norm::L2) + 1.0;
        let mut p = Self {
            g: Some(b.norm(Norm::Inf) + 1.0),
            objective: Objective::SimplexTest { b },
            set: FeasibleSet::Simplex,
            m: m2,
            m2,
            seed: None,
            f_star: None,
            x_star: None,
        };
        let (f, x) = brute_force_min(&p, 100_000)?;
        p.f_star = Some(f);
        p.x_star = Some(x);
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.objective.value(x)
    }
}

fn set_radius(set: &FeasibleSet) -> Option<f64> {
    match set {
        FeasibleSet::Simplex => Some(1.0),
        FeasibleSet::L2Ball { radius } => Some(*radius),
        FeasibleSet::Box { lo, hi } => Some(lo.abs().max(hi.abs())),
        FeasibleSet::Unconstrained => None,
    }
}

impl ValueFunction for StochasticProblem {
    fn dim(&self) -> usize {
        self.objective.dim()
    }

    fn value(&self, z: &[f64], _xi: u64) -> f64 {
        self.objective.value(z)
    }

    fn domain_distance(&self, z: &[f64]) -> f64 {
        match &self.set {
            FeasibleSet::Unconstrained => 0.0,
            set => set.distance(z),
        }
    }
}

/// `f(x) = <b, x> + ||x||_inf` on the probability simplex with
/// `b ~ U[0, 1]^d` drawn from `seed`.
pub fn make_simplex_test_problem(d: usize, seed: u64) -> Result<StochasticProblem> {
    if d < 2 {
        return Err(Error::Config("simplex test problem needs d >= 2".into()));
    }
    let mut rng = RngStream::new(seed, StreamId::new(0, 0, PROBLEM_LANE));
    let b = DenseVector::new((0..d).map(|_| rng.uniform_in(0.0, 1.0)).collect())?;
    let mut p = StochasticProblem::simplex_test(b)?;
    p.seed = Some(seed);
    Ok(p)
}

/// Minimum of a deterministic objective over the probability simplex.
///
/// For the simplex test family the optimum is found by enumeration: the best
/// point spreads mass uniformly over the `k` smallest entries of `b`, giving
/// `mean + 1/k`. It is then polished with `budget` projected subgradient
/// steps. Other objectives run projected subgradient from 16 random starts.
pub fn brute_force_min(problem: &StochasticProblem, budget: usize) -> Result<(f64, DenseVector)> {
    if problem.set != FeasibleSet::Simplex {
        return Err(Error::Unsupported("brute_force_min only handles the probability simplex".into()));
    }
    let d = problem.dim();
    let obj = &problem.objective;
    let mut best = match obj {
        Objective::SimplexTest { b } => {
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by(|&i, &j| b[i].total_cmp(&b[j]));
            let mut best = (f64::INFINITY, 0);
            let mut sum = 0.0;
            for (k, &i) in order.iter().enumerate() {
                sum += b[i];
                let v = sum / (k + 1) as f64 + 1.0 / (k + 1) as f64;
                if v < best.0 {
                    best = (v, k + 1);
                }
            }
            let mut x = vec![0.0; d];
            for &i in &order[..best.1] {
                x[i] = 1.0 / best.1 as f64;
            }
            let x = DenseVector::new(x)?;
            (obj.value(&x), x)
        }
        _ => {
            let mut rng = RngStream::new(problem.seed.unwrap_or(0), StreamId::new(0, 1, PROBLEM_LANE));
            let mut best = (f64::INFINITY, DenseVector::simplex_center(d));
            for _ in 0..16 {
                let raw: Vec<f64> = (0..d).map(|_| -rng.uniform_open().ln()).collect();
                let s: f64 = raw.iter().sum();
                let start = DenseVector::new(raw.into_iter().map(|v| v / s).collect())?;
                let cand = subgradient_descent(obj, start, budget);
                if cand.0 < best.0 {
                    best = cand;
                }
            }
            best
        }
    };
    if matches!(obj, Objective::SimplexTest { .. }) && budget > 0 {
        let polished = subgradient_descent(obj, best.1.clone(), budget);
        if polished.0 < best.0 {
            best = polished;
        }
    }
    Ok(best)
}

/// Projected subgradient on the simplex with `1/sqrt(t)` steps, keeping the
/// best iterate.
fn subgradient_descent(obj: &Objective, start: DenseVector, steps: usize) -> (f64, DenseVector) {
    let mut x = start;
    let mut best = (obj.value(&x), x.clone());
    for t in 0..steps {
        let g = obj.subgradient(&x);
        let gn = crate::vecspace::norm(&g, Norm::L2);
        if gn == 0.0 {
            break;
        }
        let eta = std::f64::consts::SQRT_2 / (gn * ((t + 1) as f64).sqrt());
        let step: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
        x = project(&DenseVector::from_vec_unchecked(step), &FeasibleSet::Simplex);
        let v = obj.value(&x);
        if v < best.0 {
            best = (v, x.clone());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn b(v: &[f64]) -> DenseVector {
        DenseVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn symmetric_optima() {
        let p = StochasticProblem::simplex_test(b(&[0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(p.f_star.unwrap(), 0.5, epsilon = 1e-12);
        assert_eq!(p.x_star.as_ref().unwrap().as_slice(), &[0.5, 0.5]);
        let p = StochasticProblem::simplex_test(b(&[0.0, 0.0, 0.0])).unwrap();
        assert_abs_diff_eq!(p.f_star.unwrap(), 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn enumeration_examples() {
        let p = StochasticProblem::simplex_test(b(&[0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(p.f_star.unwrap(), 1.0, epsilon = 1e-12);
        let p = StochasticProblem::simplex_test(b(&[0.0, 0.0, 1.0])).unwrap();
        assert_abs_diff_eq!(p.f_star.unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn optimum_is_consistent_and_a_lower_bound() {
        let p = make_simplex_test_problem(100, 7).unwrap();
        let (f, x) = (p.f_star.unwrap(), p.x_star.clone().unwrap());
        assert!(FeasibleSet::Simplex.contains(&x, 1e-12));
        assert_abs_diff_eq!(p.f(&x), f, epsilon = 1e-9);
        // Independent check: plain subgradient from the center never beats it.
        let (g, _) = subgradient_descent(&p.objective, DenseVector::simplex_center(100), 100_000);
        assert!(g >= f - 1e-12);
        assert!(g - f <= 1e-3, "{g} vs {f}");

        let mut rng = RngStream::from_seed(8);
        for _ in 0..10_000 {
            let raw: Vec<f64> = (0..100).map(|_| -rng.uniform_open().ln()).collect();
            let s: f64 = raw.iter().sum();
            let y: Vec<f64> = raw.iter().map(|v| v / s).collect();
            assert!(p.f(&y) >= f - 1e-12);
        }
    }

    #[test]
    fn generic_path_finds_linear_minimum() {
        let mut p = StochasticProblem::linear(b(&[0.3, -0.2, 0.5]), FeasibleSet::Simplex);
        p.seed = Some(1);
        let (f, _) = brute_force_min(&p, 2000).unwrap();
        assert_abs_diff_eq!(f, -0.2, epsilon = 1e-3);
        let q = StochasticProblem::quadratic(3, 1.0);
        assert!(matches!(brute_force_min(&q, 10), Err(Error::Unsupported(_))));
    }

    #[test]
    fn midpoint_convexity() {
        let p = make_simplex_test_problem(20, 3).unwrap();
        let mut rng = RngStream::from_seed(4);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..20).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let y: Vec<f64> = (0..20).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let mid: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
            assert!(p.f(&mid) <= 0.5 * (p.f(&x) + p.f(&y)) + 1e-12);
        }
    }

    #[test]
    fn problem_round_trips_through_json() {
        let p = make_simplex_test_problem(6, 11).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        let q: StochasticProblem = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
    }

    proptest! {
        #[test]
        fn enumeration_matches_exhaustive_vertices_of_faces(v in proptest::collection::vec(0.0f64..1.0, 2..7)) {
            // The optimum is attained at a barycenter of some face; check all of them.
            let d = v.len();
            let p = StochasticProblem::simplex_test(DenseVector::new(v.clone()).unwrap()).unwrap();
            let mut best = f64::INFINITY;
            for mask in 1u32..(1 << d) {
                let k = mask.count_ones() as f64;
                let x: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { 1.0 / k } else { 0.0 }).collect();
                best = best.min(p.f(&x));
            }
            prop_assert!((p.f_star.unwrap() - best).abs() <= 1e-12);
        }
    }
}
