//! Round-synchronous federated execution.
//!
//! `B` workers each draw `K` gradient-free samples per round and the results
//! are averaged at a barrier, `N` rounds in total. Worker `w` in round `n`
//! draws from the stream `(seed, w, n)`, and partial sums are combined in
//! ascending worker order, so a run is bitwise identical whether workers
//! execute on one thread or many.

mod acc_sgd;
mod smp;
mod trace;

pub use acc_sgd::{run_local_sgd_diagnostic, run_minibatch_acc_sgd, run_single_machine_acc_sgd, AcSgdState, StepPolicy};
pub use smp::{
    run_minibatch_smp, run_single_machine_smp, smp_error_bound, smp_step, smp_step_size, SaddleOperator, SmpMode, SmpParams, SmpState,
    SplitGeometry,
};
pub use trace::{Trace, TraceRow};

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecspace::{DenseVector, RngStream, StreamId};

/// Stream lane for directions and `xi`.
pub const LANE_DIRECTIONS: u64 = 0;
/// Stream lane for oracle noise.
pub const LANE_NOISE: u64 = 1;

/// `B` workers, `K` local oracle directions per worker per round, `N` rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FedTopology {
    pub b: u64,
    pub k: u64,
    pub n: u64,
}

impl FedTopology {
    pub fn new(b: u64, k: u64, n: u64) -> Result<Self> {
        let t = Self { b, k, n };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b == 0 || self.k == 0 || self.n == 0 {
            return Err(Error::Config(format!("topology entries must be >= 1, got {self:?}")));
        }
        Ok(())
    }

    /// Total direction budget `N K B`.
    pub fn budget(&self) -> u64 {
        self.n * self.k * self.b
    }
}

/// Settings shared by every engine entry point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: u64,
    /// Worker threads. `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub config_hash: String,
    /// Record real `elapsed_ms` in trace rows. Off by default so identical
    /// runs produce identical bytes.
    pub wall_clock: bool,
}

impl RunOptions {
    pub fn new(seed: u64) -> Self {
        Self { seed, threads: None, config_hash: String::new(), wall_clock: false }
    }

    pub fn threads(mut self, threads: usize) -> Self {
        self.threads = Some(threads);
        self
    }

    pub fn config_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = hash.into();
        self
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub trace: Trace,
    /// Reported point: `x_ag` for accelerated SGD, the weighted average for SMP.
    pub x: DenseVector,
    pub value: f64,
    pub gap: Option<f64>,
    pub calls: u64,
    /// Set if the run stopped early on a non-finite iterate.
    pub aborted: Option<String>,
    pub elapsed: Duration,
}

/// Count-weighted mean of worker partial sums, added in the order given.
///
/// Each entry is `(sum of samples, number of samples)`. Callers pass them in
/// ascending worker order.
pub fn aggregate_round(parts: &[(DenseVector, u64)]) -> Result<DenseVector> {
    let Some((first, _)) = parts.first() else {
        return Err(Error::Config("aggregate_round needs at least one worker".into()));
    };
    let mut sum = DenseVector::zeros(first.dim());
    let mut count = 0u64;
    for (v, c) in parts {
        if *c == 0 {
            return Err(Error::Config("worker sample count must be >= 1".into()));
        }
        if v.dim() != first.dim() {
            return Err(Error::DimensionMismatch { expected: first.dim(), got: v.dim() });
        }
        sum.axpy(1.0, v);
        count += c;
    }
    Ok(sum.scale(1.0 / count as f64))
}

/// Like [`aggregate_round`] but keyed by worker id, so input order does not matter.
pub fn aggregate_by_worker(mut parts: Vec<(u64, DenseVector, u64)>) -> Result<DenseVector> {
    parts.sort_by_key(|p| p.0);
    let ordered: Vec<(DenseVector, u64)> = parts.into_iter().map(|(_, v, c)| (v, c)).collect();
    aggregate_round(&ordered)
}

pub(crate) fn worker_streams(seed: u64, worker: u64, round: u64) -> (RngStream, RngStream) {
    (RngStream::new(seed, StreamId::new(worker, round, LANE_DIRECTIONS)), RngStream::new(seed, StreamId::new(worker, round, LANE_NOISE)))
}

/// Runs `f` inside a pool of the requested size.
pub(crate) fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(n) => {
            let pool =
                rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub(crate) struct Clock {
    start: Instant,
    enabled: bool,
}

impl Clock {
    pub(crate) fn start(enabled: bool) -> Self {
        Self { start: Instant::now(), enabled }
    }

    pub(crate) fn ms(&self) -> u64 {
        if self.enabled {
            self.start.elapsed().as_millis() as u64
        } else {
            0
        }
    }

    pub(crate) fn elapsed(&self) -> Duration {
        self.start.elapsed()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DenseVector {
        DenseVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn aggregation() {
        let one = aggregate_round(&[(v(&[2.0, 4.0]), 2)]).unwrap();
        assert_eq!(one.as_slice(), &[1.0, 2.0]);
        let cancel = aggregate_round(&[(v(&[1.0, -3.0]), 1), (v(&[-1.0, 3.0]), 1)]).unwrap();
        assert_eq!(cancel.as_slice(), &[0.0, 0.0]);
        assert!(aggregate_round(&[]).is_err());
    }

    #[test]
    fn aggregation_is_order_free_by_worker_id() {
        let parts = vec![(0, v(&[0.1, 0.7]), 3), (1, v(&[1e16, -2.0]), 1), (2, v(&[-1e16, 0.3]), 2)];
        let mut shuffled = parts.clone();
        shuffled.reverse();
        let a = aggregate_by_worker(parts).unwrap();
        let b = aggregate_by_worker(shuffled).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn topology_checks() {
        assert!(FedTopology::new(0, 1, 1).is_err());
        assert_eq!(FedTopology::new(8, 9, 729).unwrap().budget(), 8 * 6561);
    }
}
