use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{aggregate_round, with_pool, worker_streams, Clock, FedTopology, RunOptions, RunResult, Trace, TraceRow};
use crate::error::{Error, Result};
use crate::estimators::{grad_sample, SmoothingConfig};
use crate::planner::FedPlan;
use crate::problems::{NoiseModel, StochasticProblem, ZerothOrderOracle};
use crate::vecspace::{project, DenseVector};

/// `eta_t = min{1/(2L), c_eta R / (sigma_batch sqrt(t + 1))}` with
/// `sigma_batch = sigma / sqrt(batch)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepPolicy {
    pub l: f64,
    pub sigma: f64,
    pub r: f64,
    #[serde(default = "one")]
    pub c_eta: f64,
}

fn one() -> f64 {
    1.0
}

impl StepPolicy {
    pub fn new(l: f64, sigma: f64, r: f64) -> Self {
        Self { l, sigma, r, c_eta: 1.0 }
    }

    /// Smoothness and variance taken from a plan.
    pub fn from_plan(plan: &FedPlan, r: f64) -> Self {
        Self::new(plan.l_f_gamma, plan.sigma_sq.sqrt(), r)
    }

    pub fn c_eta(mut self, c: f64) -> Self {
        self.c_eta = c;
        self
    }

    pub fn eta(&self, t: u64, batch: u64) -> f64 {
        let smooth = if self.l > 0.0 { 1.0 / (2.0 * self.l) } else { f64::INFINITY };
        let sigma_batch = self.sigma / (batch as f64).sqrt();
        let noise = if sigma_batch > 0.0 { self.c_eta * self.r / (sigma_batch * ((t + 1) as f64).sqrt()) } else { f64::INFINITY };
        smooth.min(noise)
    }

    fn validate(&self) -> Result<()> {
        let finite_probe = self.eta(0, 1);
        if !finite_probe.is_finite() || finite_probe <= 0.0 {
            return Err(Error::Config(format!("step policy gives no finite positive step: {self:?}")));
        }
        Ok(())
    }
}

/// Prox center `x`, aggregate `x_ag` and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AcSgdState {
    pub x: DenseVector,
    pub x_ag: DenseVector,
    pub t: u64,
}

impl AcSgdState {
    pub fn new(x0: DenseVector) -> Self {
        Self { x_ag: x0.clone(), x: x0, t: 0 }
    }

    pub fn alpha(&self) -> f64 {
        2.0 / (self.t as f64 + 2.0)
    }

    /// The point where gradients are queried.
    pub fn x_md(&self) -> DenseVector {
        self.x_ag.lerp(self.alpha(), &self.x)
    }

    /// One accelerated step with gradient `g` taken at `x_md`.
    pub fn step(&mut self, g: &DenseVector, eta: f64, problem: &StochasticProblem) -> Result<()> {
        let alpha = self.alpha();
        let moved = self.x.add_scaled(-eta, g);
        if !moved.is_finite() {
            return Err(Error::NonFinite(format!("iterate diverged at step {}", self.t)));
        }
        self.x = project(&moved, &problem.set);
        self.x_ag = self.x_ag.lerp(alpha, &self.x);
        self.t += 1;
        Ok(())
    }
}

fn check_start(problem: &StochasticProblem, x0: &DenseVector) -> Result<()> {
    if x0.dim() != problem.dim() {
        return Err(Error::DimensionMismatch { expected: problem.dim(), got: x0.dim() });
    }
    let distance = problem.set.distance(x0);
    if distance > 1e-9 {
        return Err(Error::Domain { distance, radius: 0.0 });
    }
    Ok(())
}

fn row(problem: &StochasticProblem, x: &DenseVector, round: u64, calls: u64, opts: &RunOptions, clock: &Clock) -> TraceRow {
    let value = problem.f(x);
    TraceRow {
        round,
        calls,
        value,
        gap: problem.f_star.map(|f| value - f),
        elapsed_ms: clock.ms(),
        seed: opts.seed,
        config_hash: opts.config_hash.clone(),
    }
}

fn finish(problem: &StochasticProblem, x: DenseVector, trace: Trace, calls: u64, aborted: Option<String>, clock: &Clock) -> RunResult {
    let value = problem.f(&x);
    RunResult { gap: problem.f_star.map(|f| value - f), value, x, trace, calls, aborted, elapsed: clock.elapsed() }
}

/// `K` samples at `x` from worker `w` in round `n`. Returns their sum and the
/// oracle calls spent.
#[allow(clippy::too_many_arguments)]
fn worker_batch(
    problem: &StochasticProblem,
    noise: &NoiseModel,
    cfg: &SmoothingConfig,
    x: &DenseVector,
    k: u64,
    seed: u64,
    worker: u64,
    round: u64,
) -> Result<(DenseVector, u64)> {
    let (mut dir, noise_rng) = worker_streams(seed, worker, round);
    let mut oracle = ZerothOrderOracle::new(problem, noise, noise_rng).with_radius(cfg.gamma);
    let mut sum = DenseVector::zeros(x.dim());
    for _ in 0..k {
        let s = grad_sample(&mut oracle, x, cfg, &mut dir)?;
        sum.axpy(1.0, &s.g);
    }
    Ok((sum, oracle.calls()))
}

/// Minibatch accelerated SGD: every round all `B` workers draw `K` samples at
/// the same query point, the `B K` samples are averaged and one accelerated
/// step is taken. `N` rounds.
pub fn run_minibatch_acc_sgd(
    problem: &StochasticProblem,
    topology: FedTopology,
    cfg: &SmoothingConfig,
    noise: &NoiseModel,
    x0: &DenseVector,
    step: &StepPolicy,
    opts: &RunOptions,
) -> Result<RunResult> {
    topology.validate()?;
    step.validate()?;
    noise.validate(problem.dim())?;
    check_start(problem, x0)?;
    let clock = Clock::start(opts.wall_clock);
    let batch = topology.b * topology.k;
    with_pool(opts.threads, || {
        let mut state = AcSgdState::new(x0.clone());
        let mut trace = Trace::default();
        let mut calls = 0u64;
        for n in 0..topology.n {
            let x_md = state.x_md();
            let work = |w: u64| worker_batch(problem, noise, cfg, &x_md, topology.k, opts.seed, w, n);
            let parts: Vec<Result<(DenseVector, u64)>> =
                if topology.b == 1 { vec![work(0)] } else { (0..topology.b).into_par_iter().map(work).collect() };
            let mut sums = Vec::with_capacity(parts.len());
            for p in parts {
                let (sum, c) = p?;
                calls += c;
                sums.push((sum, topology.k));
            }
            let g = aggregate_round(&sums)?;
            let eta = step.eta(state.t, batch);
            if let Err(e) = state.step(&g, eta, problem) {
                let mut r = row(problem, &state.x_ag, n + 1, calls, opts, &clock);
                r.value = f64::NAN;
                trace.push(r);
                return Ok(finish(problem, state.x_ag, trace, calls, Some(e.to_string()), &clock));
            }
            trace.push(row(problem, &state.x_ag, n + 1, calls, opts, &clock));
        }
        Ok(finish(problem, state.x_ag, trace, calls, None, &clock))
    })?
}

/// Single-machine accelerated SGD: one worker takes `N K` sequential steps
/// with one sample each. `B` is ignored. A row is logged every `K` steps.
pub fn run_single_machine_acc_sgd(
    problem: &StochasticProblem,
    topology: FedTopology,
    cfg: &SmoothingConfig,
    noise: &NoiseModel,
    x0: &DenseVector,
    step: &StepPolicy,
    opts: &RunOptions,
) -> Result<RunResult> {
    topology.validate()?;
    step.validate()?;
    noise.validate(problem.dim())?;
    check_start(problem, x0)?;
    let clock = Clock::start(opts.wall_clock);
    let mut state = AcSgdState::new(x0.clone());
    let mut trace = Trace::default();
    let mut calls = 0u64;
    for n in 0..topology.n {
        for k in 0..topology.k {
            let s = n * topology.k + k;
            let x_md = state.x_md();
            let (g, c) = worker_batch(problem, noise, cfg, &x_md, 1, opts.seed, 0, s)?;
            calls += c;
            let eta = step.eta(state.t, 1);
            if let Err(e) = state.step(&g, eta, problem) {
                let mut r = row(problem, &state.x_ag, n + 1, calls, opts, &clock);
                r.value = f64::NAN;
                trace.push(r);
                return Ok(finish(problem, state.x_ag, trace, calls, Some(e.to_string()), &clock));
            }
        }
        trace.push(row(problem, &state.x_ag, n + 1, calls, opts, &clock));
    }
    Ok(finish(problem, state.x_ag, trace, calls, None, &clock))
}

/// Local projected SGD with periodic averaging, for diagnostics only.
///
/// Each worker takes `K` plain projected steps from the shared point and
/// the local points are averaged at the end of the round. This is not one of
/// the analysed accelerated methods.
pub fn run_local_sgd_diagnostic(
    problem: &StochasticProblem,
    topology: FedTopology,
    cfg: &SmoothingConfig,
    noise: &NoiseModel,
    x0: &DenseVector,
    step: &StepPolicy,
    opts: &RunOptions,
) -> Result<RunResult> {
    topology.validate()?;
    step.validate()?;
    noise.validate(problem.dim())?;
    check_start(problem, x0)?;
    let clock = Clock::start(opts.wall_clock);
    with_pool(opts.threads, || {
        let mut x = x0.clone();
        let mut trace = Trace::default();
        let mut calls = 0u64;
        for n in 0..topology.n {
            let local = |w: u64| -> Result<(DenseVector, u64)> {
                let (mut dir, noise_rng) = super::worker_streams(opts.seed, w, n);
                let mut oracle = ZerothOrderOracle::new(problem, noise, noise_rng).with_radius(cfg.gamma);
                let mut xl = x.clone();
                for k in 0..topology.k {
                    let g = grad_sample(&mut oracle, &xl, cfg, &mut dir)?.g;
                    xl = project(&xl.add_scaled(-step.eta(n * topology.k + k, 1), &g), &problem.set);
                }
                Ok((xl, oracle.calls()))
            };
            let parts: Vec<Result<(DenseVector, u64)>> = (0..topology.b).into_par_iter().map(local).collect();
            let mut locals = Vec::with_capacity(parts.len());
            for p in parts {
                let (xl, c) = p?;
                calls += c;
                locals.push((xl, 1));
            }
            x = aggregate_round(&locals)?;
            trace.push(row(problem, &x, n + 1, calls, opts, &clock));
        }
        Ok(finish(problem, x, trace, calls, None, &clock))
    })?
}
