//! Seeded Monte-Carlo sampling and the two-stage certification pipeline.
//!
//! Samples are processed in fixed chunks of [`CHUNK`] indices. Chunk
//! results are computed in parallel on a pool of `workers` threads and
//! combined in ascending chunk order, so counts and floating-point sums
//! are bit-identical for any worker count.

mod certify;
mod noise;
mod sampling;

pub use certify::{certify, certify_exact, select_class, CertifyOutcome, DipoleRecord, Evidence, GradientRecord};
pub use noise::{Domain, NoiseStream};
pub use sampling::{
    sample_class_counts, sample_counts, sample_dipole_pairs, sample_gradient_pairs, sample_gradient_vector,
    GradientMean,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificates::SmoothingParams;
use crate::error::{Error, Result};

/// Samples per chunk.
pub const CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    /// Samples used to pick the top class.
    pub n0: u64,
    /// Samples used to estimate the certificate evidence.
    pub n: u64,
    pub params: SmoothingParams,
    pub seed: u64,
    pub workers: usize,
}

impl SamplingPlan {
    pub fn new(n0: u64, n: u64, params: SmoothingParams, seed: u64) -> Self {
        SamplingPlan { n0, n, params, seed, workers: 1 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n0 == 0 {
            return Err(Error::InvalidPlan("n0 must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidPlan("n must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidPlan("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub(crate) fn sigma(&self) -> f64 {
        self.params.sigma()
    }
}

/// Runs `work(start, end)` over `[0, total)` in chunks and returns the
/// per-chunk results in chunk order.
pub(crate) fn run_chunks<T, F>(workers: usize, total: u64, work: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T> + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    let bounds = |c: u64| (c * CHUNK, ((c + 1) * CHUNK).min(total));
    if workers <= 1 || chunks <= 1 {
        return (0..chunks).map(|c| {
            let (s, e) = bounds(c);
            work(s, e)
        }).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidPlan(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let (s, e) = bounds(c);
                work(s, e)
            })
            .collect()
    })
}
