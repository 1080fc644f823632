use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aggregate_round, with_pool, worker_streams, Clock, FedTopology, RunOptions, RunResult, Trace, TraceRow};
use crate::error::{Error, Result};
use crate::estimators::{saddle_operator_estimate, SmoothingConfig};
use crate::problems::{exact_gap, NoiseModel, SaddleProblem, ZerothOrderOracle};
use crate::vecspace::{prox_step, DenseVector, Geometry, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmpMode {
    Minibatch,
    SingleMachine,
}

/// Separate prox geometries for the `x` and `y` blocks of `z = (x, y)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitGeometry {
    pub dx: usize,
    pub x: Geometry,
    pub y: Geometry,
}

impl SplitGeometry {
    pub fn euclidean(game: &SaddleProblem) -> Self {
        Self { dx: game.dims().0, x: Geometry::euclidean(game.set_x.clone()), y: Geometry::euclidean(game.set_y.clone()) }
    }

    /// Entropy prox on both blocks. Both sets must be simplices.
    pub fn entropy(game: &SaddleProblem) -> Result<Self> {
        use crate::vecspace::BregmanKind;
        Ok(Self {
            dx: game.dims().0,
            x: Geometry::new(BregmanKind::Entropy, game.set_x.clone())?,
            y: Geometry::new(BregmanKind::Entropy, game.set_y.clone())?,
        })
    }

    pub fn prox(&self, r: &DenseVector, xi: &DenseVector, eta: f64) -> Result<DenseVector> {
        let (rx, ry) = r.split_at(self.dx);
        let (gx, gy) = xi.split_at(self.dx);
        let x = prox_step(&rx, &gx, eta, &self.x)?;
        let y = prox_step(&ry, &gy, eta, &self.y)?;
        Ok(DenseVector::concat(&x, &y))
    }

    fn contains(&self, z: &DenseVector, tol: f64) -> bool {
        let (x, y) = z.split_at(self.dx);
        self.x.set.contains(&x, tol) && self.y.set.contains(&y, tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmpState {
    pub r: DenseVector,
    pub weighted_sum: DenseVector,
    pub weight: f64,
    pub eta: f64,
}

impl SmpState {
    pub fn new(r0: DenseVector, eta: f64) -> Self {
        Self { weighted_sum: DenseVector::zeros(r0.dim()), r: r0, weight: 0.0, eta }
    }

    /// `sum eta w / sum eta`, or `r` before the first step.
    pub fn average(&self) -> DenseVector {
        if self.weight > 0.0 {
            self.weighted_sum.scale(1.0 / self.weight)
        } else {
            self.r.clone()
        }
    }
}

/// One extragradient step. `estimate` is called at `r`, then at `w`.
pub fn smp_step(state: &mut SmpState, mut estimate: impl FnMut(&DenseVector) -> Result<DenseVector>, geom: &SplitGeometry) -> Result<()> {
    let g_r = estimate(&state.r)?;
    let w = geom.prox(&state.r, &g_r, state.eta)?;
    let g_w = estimate(&w)?;
    state.r = geom.prox(&state.r, &g_w, state.eta)?;
    state.weighted_sum.axpy(state.eta, &w);
    state.weight += state.eta;
    Ok(())
}

fn noise_term(sigma: f64, v: f64) -> f64 {
    v * v + 2.0 * sigma * sigma
}

/// Constant step `min[1/(sqrt 3 L), 7R sqrt(2BK / (7N(V^2 + 2 sigma^2)))]`.
/// Single-machine mode uses batch 1 and `KN` iterations.
pub fn smp_step_size(mode: SmpMode, l: f64, sigma: f64, v: f64, r: f64, topology: FedTopology) -> f64 {
    let (batch, iters) = match mode {
        SmpMode::Minibatch => ((topology.b * topology.k) as f64, topology.n as f64),
        SmpMode::SingleMachine => (1.0, (topology.k * topology.n) as f64),
    };
    let smooth = 1.0 / (3f64.sqrt() * l);
    let noisy = 7.0 * r * (2.0 * batch / (7.0 * iters * noise_term(sigma, v))).sqrt();
    let eta = smooth.min(noisy);
    if eta.is_finite() {
        eta
    } else {
        1.0
    }
}

/// `max[7/4 L R^2 / N, 7R sqrt((V^2 + 2 sigma^2) / (3BKN))]`, with `KN` in
/// place of `N` and no `B` in single-machine mode.
pub fn smp_error_bound(mode: SmpMode, l: f64, sigma: f64, v: f64, r: f64, topology: FedTopology) -> f64 {
    let (batch, iters) = match mode {
        SmpMode::Minibatch => ((topology.b * topology.k) as f64, topology.n as f64),
        SmpMode::SingleMachine => (1.0, (topology.k * topology.n) as f64),
    };
    let det = 1.75 * l * r * r / iters;
    let stoch = 7.0 * r * (noise_term(sigma, v) / (3.0 * batch * iters)).sqrt();
    det.max(stoch)
}

/// How `F(z)` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SaddleOperator {
    /// The true operator. Each of the `BK` evaluations is counted as one call.
    Exact,
    /// Gradient-free estimates smoothed per block.
    Estimated { cfg_x: SmoothingConfig, cfg_y: SmoothingConfig },
}

impl SaddleOperator {
    fn calls_per_sample(&self) -> u64 {
        match self {
            SaddleOperator::Exact => 1,
            SaddleOperator::Estimated { cfg_x, .. } => cfg_x.feedback.calls(),
        }
    }

    fn radius(&self) -> f64 {
        match self {
            SaddleOperator::Exact => 0.0,
            SaddleOperator::Estimated { cfg_x, cfg_y } => cfg_x.gamma.hypot(cfg_y.gamma),
        }
    }
}

struct Worker<'a> {
    oracle: ZerothOrderOracle<'a, SaddleProblem>,
    dir: RngStream,
}

impl Worker<'_> {
    fn sum(&mut self, z: &DenseVector, op: &SaddleOperator, k: u64) -> Result<DenseVector> {
        let SaddleOperator::Estimated { cfg_x, cfg_y } = op else { unreachable!("exact operator needs no workers") };
        let mut sum = DenseVector::zeros(z.dim());
        for _ in 0..k {
            let s = saddle_operator_estimate(&mut self.oracle, z, cfg_x, cfg_y, &mut self.dir)?;
            sum.axpy(1.0, &s.g);
        }
        Ok(sum)
    }
}

fn workers<'a>(
    game: &'a SaddleProblem,
    noise: &'a NoiseModel,
    op: &SaddleOperator,
    seed: u64,
    ids: impl Iterator<Item = (u64, u64)>,
) -> Vec<Worker<'a>> {
    ids.map(|(w, round)| {
        let (dir, noise_rng) = worker_streams(seed, w, round);
        Worker { oracle: ZerothOrderOracle::new(game, noise, noise_rng).with_radius(op.radius()), dir }
    })
    .collect()
}

fn batch_estimate(ws: &mut [Worker<'_>], z: &DenseVector, op: &SaddleOperator, k: u64) -> Result<DenseVector> {
    let sums: Vec<Result<DenseVector>> =
        if ws.len() == 1 { vec![ws[0].sum(z, op, k)] } else { ws.par_iter_mut().map(|w| w.sum(z, op, k)).collect() };
    let mut parts = Vec::with_capacity(sums.len());
    for s in sums {
        parts.push((s?, k));
    }
    aggregate_round(&parts)
}

/// Step-size inputs that the game itself does not carry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmpParams {
    /// Standard deviation bound of one operator sample.
    pub sigma: f64,
    /// Distance scale `R` from the start to a solution.
    pub r: f64,
    /// Fixed step overriding the formula.
    #[serde(default)]
    pub eta: Option<f64>,
}

impl SmpParams {
    pub fn new(sigma: f64, r: f64) -> Self {
        Self { sigma, r, eta: None }
    }
}

fn prepare(
    game: &SaddleProblem,
    topology: FedTopology,
    noise: &NoiseModel,
    z0: &DenseVector,
    geom: &SplitGeometry,
    op: &SaddleOperator,
) -> Result<()> {
    topology.validate()?;
    noise.validate(z0.dim())?;
    let (dx, dy) = game.dims();
    if z0.dim() != dx + dy {
        return Err(Error::DimensionMismatch { expected: dx + dy, got: z0.dim() });
    }
    if geom.dx != dx {
        return Err(Error::DimensionMismatch { expected: dx, got: geom.dx });
    }
    if !geom.contains(z0, 1e-9) {
        return Err(Error::Domain { distance: crate::problems::ValueFunction::domain_distance(game, z0), radius: 0.0 });
    }
    if let SaddleOperator::Estimated { cfg_x, cfg_y } = op {
        if cfg_x.feedback != cfg_y.feedback {
            return Err(Error::Config("x and y blocks must use the same feedback".into()));
        }
    }
    Ok(())
}

fn row(game: &SaddleProblem, z: &DenseVector, round: u64, calls: u64, opts: &RunOptions, clock: &Clock) -> Result<TraceRow> {
    let (dx, _) = game.dims();
    let (x, y) = z.split_at(dx);
    Ok(TraceRow {
        round,
        calls,
        value: game.f(&x, &y),
        gap: Some(exact_gap(game, &x, &y)?),
        elapsed_ms: clock.ms(),
        seed: opts.seed,
        config_hash: opts.config_hash.clone(),
    })
}

fn finish(game: &SaddleProblem, state: &SmpState, trace: Trace, calls: u64, aborted: Option<String>, clock: &Clock) -> Result<RunResult> {
    let z = state.average();
    let (dx, _) = game.dims();
    let (x, y) = z.split_at(dx);
    Ok(RunResult { value: game.f(&x, &y), gap: Some(exact_gap(game, &x, &y)?), x: z, trace, calls, aborted, elapsed: clock.elapsed() })
}

fn step_size(mode: SmpMode, game: &SaddleProblem, params: &SmpParams, topology: FedTopology) -> Result<f64> {
    let eta = params.eta.unwrap_or_else(|| smp_step_size(mode, game.l, params.sigma, game.v, params.r, topology));
    if !eta.is_finite() || eta <= 0.0 {
        return Err(Error::Config(format!("SMP step must be positive and finite, got {eta}")));
    }
    Ok(eta)
}

/// Runs one SMP iteration on the workers `ids`, each drawing `k` samples per
/// query point. Worker streams carry over from the `r` phase to the `w` phase.
#[allow(clippy::too_many_arguments)]
fn iterate(
    state: &mut SmpState,
    game: &SaddleProblem,
    noise: &NoiseModel,
    op: &SaddleOperator,
    geom: &SplitGeometry,
    seed: u64,
    ids: impl Iterator<Item = (u64, u64)>,
    k: u64,
) -> Result<()> {
    match op {
        SaddleOperator::Exact => smp_step(state, |z| Ok(game.operator(z)), geom),
        SaddleOperator::Estimated { .. } => {
            let mut ws = workers(game, noise, op, seed, ids);
            smp_step(state, |z| batch_estimate(&mut ws, z, op, k), geom)
        }
    }
}

/// `N` SMP iterations with operator estimates batched over `B K` samples at
/// each of the two query points.
#[allow(clippy::too_many_arguments)]
pub fn run_minibatch_smp(
    game: &SaddleProblem,
    topology: FedTopology,
    op: &SaddleOperator,
    noise: &NoiseModel,
    z0: &DenseVector,
    geom: &SplitGeometry,
    params: &SmpParams,
    opts: &RunOptions,
) -> Result<RunResult> {
    prepare(game, topology, noise, z0, geom, op)?;
    let eta = step_size(SmpMode::Minibatch, game, params, topology)?;
    let clock = Clock::start(opts.wall_clock);
    let per_iter = 2 * topology.b * topology.k * op.calls_per_sample();
    with_pool(opts.threads, || {
        let mut state = SmpState::new(z0.clone(), eta);
        let mut trace = Trace::default();
        let mut calls = 0u64;
        for n in 0..topology.n {
            let ids = (0..topology.b).map(move |w| (w, n));
            if let Err(e) = iterate(&mut state, game, noise, op, geom, opts.seed, ids, topology.k) {
                if !matches!(e, Error::NonFinite(_)) {
                    return Err(e);
                }
                let mut r = row(game, &state.average(), n + 1, calls, opts, &clock)?;
                r.value = f64::NAN;
                trace.push(r);
                return finish(game, &state, trace, calls, Some(e.to_string()), &clock);
            }
            calls += per_iter;
            trace.push(row(game, &state.average(), n + 1, calls, opts, &clock)?);
        }
        finish(game, &state, trace, calls, None, &clock)
    })?
}

/// `K N` SMP iterations with one sample per query point. `B` is ignored and a
/// row is logged every `K` iterations.
#[allow(clippy::too_many_arguments)]
pub fn run_single_machine_smp(
    game: &SaddleProblem,
    topology: FedTopology,
    op: &SaddleOperator,
    noise: &NoiseModel,
    z0: &DenseVector,
    geom: &SplitGeometry,
    params: &SmpParams,
    opts: &RunOptions,
) -> Result<RunResult> {
    prepare(game, topology, noise, z0, geom, op)?;
    let eta = step_size(SmpMode::SingleMachine, game, params, topology)?;
    let clock = Clock::start(opts.wall_clock);
    let per_iter = 2 * op.calls_per_sample();
    let mut state = SmpState::new(z0.clone(), eta);
    let mut trace = Trace::default();
    let mut calls = 0u64;
    for n in 0..topology.n {
        for k in 0..topology.k {
            let s = n * topology.k + k;
            if let Err(e) = iterate(&mut state, game, noise, op, geom, opts.seed, std::iter::once((0, s)), 1) {
                if !matches!(e, Error::NonFinite(_)) {
                    return Err(e);
                }
                let mut r = row(game, &state.average(), n + 1, calls, opts, &clock)?;
                r.value = f64::NAN;
                trace.push(r);
                return finish(game, &state, trace, calls, Some(e.to_string()), &clock);
            }
            calls += per_iter;
        }
        trace.push(row(game, &state.average(), n + 1, calls, opts, &clock)?);
    }
    finish(game, &state, trace, calls, None, &clock)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Feedback;
    use crate::problems::{make_bilinear_game, Matrix};
    use crate::vecspace::Lp;
    use approx::assert_abs_diff_eq;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    fn swap_game() -> SaddleProblem {
        make_bilinear_game(Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap())
    }

    fn corner() -> DenseVector {
        v(&[1.0, 0.0, 1.0, 0.0])
    }

    fn estimated(gamma: f64) -> SaddleOperator {
        let cfg = SmoothingConfig::new(Lp::L2, Feedback::TwoPoint, gamma).unwrap();
        SaddleOperator::Estimated { cfg_x: cfg, cfg_y: cfg }
    }

    #[test]
    fn zero_operator_is_a_fixed_point() {
        let g = swap_game();
        let geom = SplitGeometry::euclidean(&g);
        let mut s = SmpState::new(v(&[0.3, 0.7, 0.5, 0.5]), 0.2);
        for _ in 0..3 {
            smp_step(&mut s, |z| Ok(DenseVector::zeros(z.dim())), &geom).unwrap();
        }
        assert_eq!(s.r, v(&[0.3, 0.7, 0.5, 0.5]));
        for (a, b) in s.average().iter().zip(s.r.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
    }

    #[test]
    fn one_step_reduces_gap() {
        let g = swap_game();
        let geom = SplitGeometry::euclidean(&g);
        let mut s = SmpState::new(corner(), 0.1);
        smp_step(&mut s, |z| Ok(g.operator(z)), &geom).unwrap();
        // F(r0) = ([0, 1], [0, -1]): x is pinned at the vertex, y moves to [0.95, 0.05].
        let (x, y) = s.r.split_at(2);
        assert_eq!(x.as_slice(), &[1.0, 0.0]);
        assert_abs_diff_eq!(y[0], 0.95, epsilon = 1e-12);
        assert_abs_diff_eq!(exact_gap(&g, &x, &y).unwrap(), 0.95, epsilon = 1e-12);
    }

    #[test]
    fn equal_steps_average_arithmetically() {
        let g = swap_game();
        let geom = SplitGeometry::euclidean(&g);
        let mut s = SmpState::new(corner(), 0.1);
        let mut ws = Vec::new();
        for _ in 0..4 {
            let r = s.r.clone();
            ws.push(geom.prox(&r, &g.operator(&r), 0.1).unwrap());
            smp_step(&mut s, |z| Ok(g.operator(z)), &geom).unwrap();
        }
        let mean = ws.iter().fold(DenseVector::zeros(4), |a, w| a.add(w)).scale(0.25);
        for (a, b) in s.average().iter().zip(mean.iter()) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn step_size_branches() {
        let t = FedTopology::new(1, 1, 14).unwrap();
        assert_abs_diff_eq!(smp_step_size(SmpMode::Minibatch, 1.0, 1.0, 0.0, 1.0, t), 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(smp_step_size(SmpMode::Minibatch, 2.0, 0.0, 0.0, 1.0, t), 1.0 / (2.0 * 3f64.sqrt()), epsilon = 1e-15);
        let flat = smp_step_size(SmpMode::Minibatch, 1e-12, 1.0, 0.0, 1.0, t);
        assert_abs_diff_eq!(flat, 7.0 * (2.0 / (7.0 * 14.0 * 2.0f64)).sqrt(), epsilon = 1e-15);
        let t = FedTopology::new(4, 3, 5).unwrap();
        assert_eq!(
            smp_step_size(SmpMode::SingleMachine, 1e-12, 1.0, 0.0, 1.0, t),
            smp_step_size(SmpMode::Minibatch, 1e-12, 1.0, 0.0, 1.0, FedTopology::new(1, 1, 15).unwrap())
        );
    }

    #[test]
    fn exact_run_meets_deterministic_bound() {
        let g = swap_game();
        let t = FedTopology::new(1, 1, 1000).unwrap();
        let r = run_minibatch_smp(
            &g,
            t,
            &SaddleOperator::Exact,
            &NoiseModel::none(),
            &corner(),
            &SplitGeometry::euclidean(&g),
            &SmpParams::new(0.0, 1.0),
            &RunOptions::new(0),
        )
        .unwrap();
        assert!(r.gap.unwrap() <= 2.0 * 1.75 * g.l / 1000.0, "{:?}", r.gap);
        assert_eq!(r.calls, 2000);
    }

    #[test]
    fn zero_game_has_zero_gap() {
        let g = make_bilinear_game(Matrix::zeros(2, 3));
        let z0 = v(&[0.5, 0.5, 1.0, 0.0, 0.0]);
        let t = FedTopology::new(2, 2, 5).unwrap();
        let r = run_minibatch_smp(
            &g,
            t,
            &estimated(0.01),
            &NoiseModel::none(),
            &z0,
            &SplitGeometry::euclidean(&g),
            &SmpParams::new(1.0, 1.0),
            &RunOptions::new(1),
        )
        .unwrap();
        assert!(r.trace.rows.iter().all(|row| row.gap == Some(0.0)));
        assert_eq!(r.calls, 5 * 2 * 2 * 2 * 2);
    }

    #[test]
    fn single_machine_matches_minibatch_for_unit_batch() {
        let g = swap_game();
        let geom = SplitGeometry::euclidean(&g);
        let t = FedTopology::new(1, 1, 30).unwrap();
        let op = estimated(0.01);
        let params = SmpParams::new(2.0, 1.0);
        let noise = NoiseModel::uniform(1e-4);
        let a = run_minibatch_smp(&g, t, &op, &noise, &corner(), &geom, &params, &RunOptions::new(4)).unwrap();
        let b = run_single_machine_smp(&g, t, &op, &noise, &corner(), &geom, &params, &RunOptions::new(4)).unwrap();
        assert_eq!(a.trace, b.trace);
        let c =
            run_single_machine_smp(&g, FedTopology::new(7, 1, 30).unwrap(), &op, &noise, &corner(), &geom, &params, &RunOptions::new(4))
                .unwrap();
        assert_eq!(c.calls, a.calls);
    }

    #[test]
    fn parallel_workers_are_deterministic() {
        let g = swap_game();
        let geom = SplitGeometry::euclidean(&g);
        let t = FedTopology::new(5, 2, 10).unwrap();
        let op = estimated(0.01);
        let params = SmpParams::new(2.0, 1.0);
        let noise = NoiseModel::none();
        let a = run_minibatch_smp(&g, t, &op, &noise, &corner(), &geom, &params, &RunOptions::new(8).threads(1)).unwrap();
        let b = run_minibatch_smp(&g, t, &op, &noise, &corner(), &geom, &params, &RunOptions::new(8).threads(3)).unwrap();
        assert_eq!(a.trace.to_csv_string().unwrap(), b.trace.to_csv_string().unwrap());
    }

    #[test]
    fn entropy_geometry_runs() {
        let g = swap_game();
        let geom = SplitGeometry::entropy(&g).unwrap();
        let z0 = v(&[0.9, 0.1, 0.9, 0.1]);
        let r = run_minibatch_smp(
            &g,
            FedTopology::new(1, 1, 200).unwrap(),
            &SaddleOperator::Exact,
            &NoiseModel::none(),
            &z0,
            &geom,
            &SmpParams::new(0.0, 1.0),
            &RunOptions::new(0),
        )
        .unwrap();
        assert!(r.gap.unwrap() < 0.05, "{:?}", r.gap);
    }

    #[test]
    fn infeasible_start_is_rejected() {
        let g = swap_game();
        let err = run_minibatch_smp(
            &g,
            FedTopology::new(1, 1, 1).unwrap(),
            &SaddleOperator::Exact,
            &NoiseModel::none(),
            &v(&[1.0, 1.0, 1.0, 0.0]),
            &SplitGeometry::euclidean(&g),
            &SmpParams::new(0.0, 1.0),
            &RunOptions::new(0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }
}
