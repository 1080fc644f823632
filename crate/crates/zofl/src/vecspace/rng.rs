//! Reproducible random streams keyed by `(seed, worker, round, lane)`.
//!
//! Each stream is a ChaCha8 generator whose key comes from the run seed and
//! whose 64-bit stream selector is a mix of the stream id, so draws depend
//! only on the id and never on thread scheduling.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct StreamId {
    pub worker: u64,
    pub round: u64,
    /// Separates independent purposes (directions, noise, starts) within one
    /// worker and round.
    pub lane: u64,
}

impl StreamId {
    pub const fn new(worker: u64, round: u64, lane: u64) -> Self {
        Self { worker, round, lane }
    }
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    id: StreamId,
    inner: ChaCha8Rng,
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, id: StreamId) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        let selector = splitmix64(splitmix64(splitmix64(id.worker) ^ id.round) ^ id.lane.rotate_left(17));
        inner.set_stream(selector);
        Self { seed, id, inner }
    }

    /// Stream `(0, 0, 0)` of `seed`.
    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, StreamId::default())
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    /// A sibling stream with the same seed and a different id.
    pub fn derive(&self, id: StreamId) -> Self {
        Self::new(self.seed, id)
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn uniform_open(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits.
            let u = (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform on `[lo, hi]`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.inner.next_u64() >> 11) as f64 * (1.0 / ((1u64 << 53) - 1) as f64);
        lo + (hi - lo) * u
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Laplace(0, 1): a unit exponential with a fair random sign.
    pub fn laplace(&mut self) -> f64 {
        let magnitude: f64 = Exp1.sample(&mut self.inner);
        if self.inner.next_u32() & 1 == 0 {
            magnitude
        } else {
            -magnitude
        }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
