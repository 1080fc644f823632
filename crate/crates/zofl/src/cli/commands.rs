use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{min_constants, saddle_constants, BuiltProblem, ExperimentConfig, OperatorKind, SigmaRule, SigmaSpec};
use super::validate::{run_suite, Check};
use crate::error::{Error, Result};
use crate::estimators::{grad_sample, McEstimate, SmoothingConfig};
use crate::fedsim::{
    run_minibatch_acc_sgd, run_minibatch_smp, run_single_machine_acc_sgd, run_single_machine_smp, with_pool, FedTopology, RunOptions,
    RunResult, SaddleOperator, SmpParams, SplitGeometry, StepPolicy,
};
use crate::planner::{plan, sigma_sq_bound, smoothing_gamma, Algorithm, FedPlan, ProblemConstants};
use crate::problems::{NoiseModel, StochasticProblem, ZerothOrderOracle};
use crate::vecspace::{BregmanKind, DenseVector, Lp, Norm, RngStream, StreamId};

/// Plans for each configured scheme. Without a problem, `constants` must
/// carry `d`, `m`, `m2`, `r` and `eps`.
pub fn cmd_params(cfg: &ExperimentConfig) -> Result<Vec<FedPlan>> {
    let alg = cfg.algorithm()?;
    let c = match &cfg.problem {
        None => explicit_constants(cfg)?,
        Some(spec) => match spec.build()? {
            BuiltProblem::Min(p) => min_constants(&p, &start(cfg, &BuiltProblem::Min(p.clone()))?, &cfg.constants)?,
            BuiltProblem::Saddle(g) => saddle_constants(&g, &cfg.constants)?.0,
        },
    };
    cfg.scheme.list().into_iter().map(|s| plan(alg, &c, s, cfg.feedback)).collect()
}

fn explicit_constants(cfg: &ExperimentConfig) -> Result<ProblemConstants> {
    let o = &cfg.constants;
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::Config(format!("constants.{name} is required without a problem")));
    let c = ProblemConstants {
        d: o.d.ok_or_else(|| Error::Config("constants.d is required without a problem".into()))?,
        m: need(o.m, "m")?,
        m2: need(o.m2, "m2")?,
        g: o.g,
        r: need(o.r, "r")?,
        eps: need(o.eps, "eps")?,
        p: o.p.unwrap_or(Lp::L2),
    };
    c.validate()?;
    Ok(c)
}

fn start(cfg: &ExperimentConfig, problem: &BuiltProblem) -> Result<DenseVector> {
    match &cfg.start {
        Some(v) => {
            let x = DenseVector::new(v.clone())?;
            if x.dim() != problem.dim() {
                return Err(Error::Config(format!("start has {} entries, problem has {}", x.dim(), problem.dim())));
            }
            Ok(x)
        }
        None => Ok(problem.default_start()),
    }
}

/// Root of `E||g||_2^2` at `x0` from 2000 noiseless samples on a fixed stream.
fn measured_sigma(p: &StochasticProblem, x0: &DenseVector, smoothing: &SmoothingConfig) -> Result<f64> {
    let noise = NoiseModel::none();
    let mut oracle = ZerothOrderOracle::new(p, &noise, RngStream::new(0, StreamId::new(u64::MAX, 0, 0))).without_domain_check();
    let mut rng = RngStream::new(0, StreamId::new(u64::MAX, 0, 1));
    let mut acc = 0.0;
    for _ in 0..MEASURE_SAMPLES {
        acc += grad_sample(&mut oracle, x0, smoothing, &mut rng)?.g.norm(Norm::L2).powi(2);
    }
    Ok((acc / MEASURE_SAMPLES as f64).sqrt())
}

const MEASURE_SAMPLES: usize = 2000;

/// Everything needed to launch runs of one scheme.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub problem: BuiltProblem,
    pub algorithm: Algorithm,
    pub scheme: Lp,
    pub x0: DenseVector,
    pub plan: FedPlan,
    kind: PreparedKind,
}

#[derive(Debug, Clone)]
enum PreparedKind {
    Min { smoothing: SmoothingConfig, step: StepPolicy },
    Saddle { op: SaddleOperator, geom: SplitGeometry, params: SmpParams },
}

impl Prepared {
    pub fn new(cfg: &ExperimentConfig, scheme: Lp) -> Result<Self> {
        let algorithm = cfg.algorithm()?;
        if !algorithm.executable() {
            return Err(Error::Unsupported(format!("{algorithm:?} is planned but not executable")));
        }
        let problem = cfg.problem_spec()?.build()?;
        let x0 = start(cfg, &problem)?;
        let (plan, kind) = match &problem {
            BuiltProblem::Min(p) => {
                if algorithm.is_saddle() {
                    return Err(Error::Config(format!("{algorithm:?} needs a saddle problem")));
                }
                let c = min_constants(p, &x0, &cfg.constants)?;
                let plan = plan(algorithm, &c, scheme, cfg.feedback)?;
                let gamma = cfg.gamma.unwrap_or(plan.gamma);
                let smoothing = SmoothingConfig::with_p(scheme, cfg.feedback, gamma, c.p)?;
                let d = c.d as f64;
                let l = cfg.smoothness.unwrap_or(match scheme {
                    Lp::L1 => d * c.m / (2.0 * gamma),
                    Lp::L2 => d.sqrt() * c.m / gamma,
                });
                let sigma = match cfg.sigma {
                    None | Some(SigmaSpec::Named(SigmaRule::Planned)) => plan.sigma_sq.sqrt(),
                    Some(SigmaSpec::Value(v)) => v,
                    Some(SigmaSpec::Named(SigmaRule::Measured)) => measured_sigma(p, &x0, &smoothing)?,
                };
                let step = StepPolicy::new(l, sigma, c.r).c_eta(cfg.c_eta.unwrap_or(1.0));
                (plan, PreparedKind::Min { smoothing, step })
            }
            BuiltProblem::Saddle(g) => {
                if !algorithm.is_saddle() {
                    return Err(Error::Config(format!("{algorithm:?} needs a minimization problem")));
                }
                let (cx, cy) = saddle_constants(g, &cfg.constants)?;
                let plan = plan(algorithm, &cx, scheme, cfg.feedback)?;
                let (op, sigma) = match cfg.operator {
                    OperatorKind::Exact => (SaddleOperator::Exact, 0.0),
                    OperatorKind::Estimated => {
                        let gx = cfg.gamma.unwrap_or_else(|| smoothing_gamma(&cx, scheme));
                        let gy = cfg.gamma.unwrap_or_else(|| smoothing_gamma(&cy, scheme));
                        let op = SaddleOperator::Estimated {
                            cfg_x: SmoothingConfig::with_p(scheme, cfg.feedback, gx, cx.p)?,
                            cfg_y: SmoothingConfig::with_p(scheme, cfg.feedback, gy, cy.p)?,
                        };
                        let s2 = sigma_sq_bound(&cx, scheme, cfg.feedback)? + sigma_sq_bound(&cy, scheme, cfg.feedback)?;
                        (op, s2.sqrt())
                    }
                };
                let geom = match cfg.geometry {
                    BregmanKind::Euclidean => SplitGeometry::euclidean(g),
                    BregmanKind::Entropy => SplitGeometry::entropy(g)?,
                };
                let params = SmpParams { sigma, r: cx.r, eta: cfg.eta };
                (plan, PreparedKind::Saddle { op, geom, params })
            }
        };
        Ok(Self { problem, algorithm, scheme, x0, plan, kind })
    }

    /// The configured topology, or the planned one.
    pub fn topology(&self, cfg: &ExperimentConfig) -> Result<FedTopology> {
        match cfg.topology {
            Some(t) => Ok(t),
            None => FedTopology::new(self.plan.b, self.plan.k, self.plan.n),
        }
    }

    pub fn run(&self, cfg: &ExperimentConfig, topology: FedTopology, opts: &RunOptions) -> Result<RunResult> {
        let noise = cfg.noise();
        match (&self.problem, &self.kind) {
            (BuiltProblem::Min(p), PreparedKind::Min { smoothing, step }) => match self.algorithm {
                Algorithm::MbAsgd => run_minibatch_acc_sgd(p, topology, smoothing, &noise, &self.x0, step, opts),
                _ => run_single_machine_acc_sgd(p, topology, smoothing, &noise, &self.x0, step, opts),
            },
            (BuiltProblem::Saddle(g), PreparedKind::Saddle { op, geom, params }) => match self.algorithm {
                Algorithm::MbSmp => run_minibatch_smp(g, topology, op, &noise, &self.x0, geom, params, opts),
                _ => run_single_machine_smp(g, topology, op, &noise, &self.x0, geom, params, opts),
            },
            _ => unreachable!("problem and algorithm family are matched in new"),
        }
    }
}

pub fn scheme_label(s: Lp) -> &'static str {
    match s {
        Lp::L1 => "l1",
        Lp::L2 => "l2",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub scheme: Lp,
    pub seed: u64,
    pub final_value: f64,
    pub final_error: Option<f64>,
    pub calls: u64,
    pub aborted: Option<String>,
    /// Trace file name inside the output directory.
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchemeSummary {
    pub scheme: Lp,
    pub runs: usize,
    pub mean_error: f64,
    pub sd_error: f64,
    pub se_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub algorithm: Algorithm,
    pub noise_level: f64,
    pub topology: FedTopology,
    pub schemes: Vec<SchemeSummary>,
    pub runs: Vec<RunSummary>,
    /// Plain-language l1 versus l2 comparison when both were run.
    pub comparison: Option<String>,
}

fn stats(errors: &[f64]) -> (f64, f64, f64) {
    let est = McEstimate::from_samples(errors.iter().copied());
    let sd = est.se * (errors.len() as f64).sqrt();
    if errors.len() < 2 {
        (est.mean, 0.0, 0.0)
    } else {
        (est.mean, sd, est.se)
    }
}

/// Runs `repeat` seeds per scheme. Traces go to `out` when given.
pub fn cmd_run(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Summary> {
    let hash = cfg.hash();
    let schemes = cfg.scheme.list();
    let prepared: Vec<Prepared> = schemes.iter().map(|&s| Prepared::new(cfg, s)).collect::<Result<_>>()?;
    let topology = prepared[0].topology(cfg)?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let jobs: Vec<(usize, u64)> = (0..prepared.len()).flat_map(|i| (0..cfg.repeat).map(move |r| (i, cfg.seed.wrapping_add(r)))).collect();
    let runs = with_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|&(i, seed)| -> Result<RunSummary> {
                let p = &prepared[i];
                let opts = RunOptions { seed, threads: None, config_hash: hash.clone(), wall_clock: cfg.wall_clock };
                let res = p.run(cfg, topology, &opts)?;
                let trace = match out {
                    Some(dir) => {
                        let name = PathBuf::from(format!("trace_{}_{seed}.csv", scheme_label(p.scheme)));
                        res.trace.save_csv(&dir.join(&name))?;
                        Some(name)
                    }
                    None => None,
                };
                Ok(RunSummary {
                    scheme: p.scheme,
                    seed,
                    final_value: res.value,
                    final_error: res.gap,
                    calls: res.calls,
                    aborted: res.aborted,
                    trace,
                })
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let per_scheme: Vec<SchemeSummary> = schemes
        .iter()
        .map(|&s| {
            let errs: Vec<f64> = runs.iter().filter(|r| r.scheme == s).filter_map(|r| r.final_error).collect();
            let (mean, sd, se) = stats(&errs);
            SchemeSummary { scheme: s, runs: errs.len(), mean_error: mean, sd_error: sd, se_error: se }
        })
        .collect();
    let find = |s: Lp| per_scheme.iter().find(|x| x.scheme == s);
    let comparison = match (find(Lp::L1), find(Lp::L2)) {
        (Some(a), Some(b)) => Some(format!(
            "l1 mean error {:.4e} vs l2 mean error {:.4e}: l1 is {}",
            a.mean_error,
            b.mean_error,
            if a.mean_error <= b.mean_error { "lower or equal" } else { "higher" }
        )),
        _ => None,
    };
    let summary = Summary {
        config_hash: hash,
        algorithm: prepared[0].algorithm,
        noise_level: cfg.noise().level,
        topology,
        schemes: per_scheme,
        runs,
        comparison,
    };
    if let Some(dir) = out {
        std::fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scheme: String,
    pub k: u64,
    pub n: u64,
    pub mean_err: f64,
    pub se: f64,
    pub runs: usize,
}

/// One row per `K` and scheme with `N = budget / K`. Entries of `K` that do
/// not divide the budget are skipped with a warning on stderr.
pub fn cmd_sweep_k(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<SweepRow>> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::Config("sweep-k needs a sweep section".into()))?;
    let hash = cfg.hash();
    let prepared: Vec<Prepared> = cfg.scheme.list().iter().map(|&s| Prepared::new(cfg, s)).collect::<Result<_>>()?;
    let mut cells = Vec::new();
    for (i, _) in prepared.iter().enumerate() {
        for &k in &sweep.k {
            if sweep.budget % k != 0 {
                eprintln!("warning: K = {k} does not divide the budget {}, skipped", sweep.budget);
                continue;
            }
            cells.push((i, k, sweep.budget / k));
        }
    }
    let jobs: Vec<(usize, u64, u64, u64)> =
        cells.iter().flat_map(|&(i, k, n)| (0..cfg.repeat).map(move |r| (i, k, n, cfg.seed.wrapping_add(r)))).collect();
    let errors = with_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|&(i, k, n, seed)| -> Result<f64> {
                let opts = RunOptions { seed, threads: None, config_hash: hash.clone(), wall_clock: false };
                let res = prepared[i].run(cfg, FedTopology::new(sweep.b, k, n)?, &opts)?;
                Ok(res.gap.unwrap_or(res.value))
            })
            .collect::<Result<Vec<f64>>>()
    })??;
    let rows: Vec<SweepRow> = cells
        .iter()
        .enumerate()
        .map(|(c, &(i, k, n))| {
            let chunk = &errors[c * cfg.repeat as usize..(c + 1) * cfg.repeat as usize];
            let (mean, _, se) = stats(chunk);
            SweepRow { scheme: scheme_label(prepared[i].scheme).into(), k, n, mean_err: mean, se, runs: chunk.len() }
        })
        .collect();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sweep.csv"), sweep_csv(&rows)?)?;
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["scheme", "k", "n", "mean_err", "se", "runs"])?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.k.to_string(),
            r.n.to_string(),
            format!("{:?}", r.mean_err),
            format!("{:?}", r.se),
            r.runs.to_string(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| Error::Config(e.to_string()))?).expect("utf-8"))
}

pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    with_pool(cfg.threads, || run_suite(cfg.depth, cfg.seed))?
}
