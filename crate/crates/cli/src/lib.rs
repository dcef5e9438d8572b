//! Experiment harness for `smoothcert`.
//!
//! Every subcommand produces a [`table::Table`] and writes it as CSV or as
//! one JSON object per line. Multi-point runs are parallel across points
//! and keep their rows in input order; single-point runs parallelize the
//! sampling instead. Either way the output does not depend on the worker
//! count.

pub mod args;
pub mod classifier;
pub mod commands;
pub mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use args::{Cli, Command};
pub use commands::{cmd_certify, cmd_compare, cmd_curve, cmd_swissroll};

/// A problem with the invocation rather than with the run; exits with 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Dispatches a parsed command line.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Certify(a) => cmd_certify(a, out),
        Command::Curve(a) => cmd_curve(a, out),
        Command::Swissroll(a) => cmd_swissroll(a, out),
        Command::Compare(a) => cmd_compare(a, out),
    }
}

/// Exit code for an error returned by [`run`].
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        EXIT_USAGE
    } else {
        EXIT_RUNTIME
    }
}

/// Runs `f` on a file named by `path`, or on `out` when there is none.
pub(crate) fn with_output(path: Option<&Path>, out: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("creating {}", p.display()))?;
            let mut w = BufWriter::new(file);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(out),
    }
}

/// Standard output, for binaries.
pub fn stdout() -> io::StdoutLock<'static> {
    io::stdout().lock()
}

/// A seed for one point and role, derived from the run seed so that
/// points and roles draw independent noise.
pub fn point_seed(seed: u64, point: u64, role: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(point.wrapping_mul(2).wrapping_add(role));
    rng.next_u64()
}

/// Evaluates `f(index, inner_workers)` for every point, in parallel across
/// points when there is more than one, and returns results in order.
pub(crate) fn map_points<T, F>(count: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, usize) -> Result<T> + Sync,
{
    if count <= 1 || workers <= 1 {
        return (0..count).map(|i| f(i, workers)).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(|| (0..count).into_par_iter().map(|i| f(i, 1)).collect())
}
