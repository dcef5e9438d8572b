//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use smoothcert::certificates::{GradientSpec, Method};

use crate::table::Format;

/// A comma-separated vector. The alias keeps clap from treating the `Vec`
/// as a list of separate values.
pub type Coords = Vec<f64>;

#[derive(Debug, Parser)]
#[command(name = "smoothcert", version, about = "Certified radii for Gaussian-smoothed classifiers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Certify one or more points.
    Certify(CertifyArgs),
    /// Tabulate bound-vs-distance or radius-vs-p curves.
    Curve(CurveArgs),
    /// Nearest-neighbour classifier on a two-spiral dataset, first vs second order.
    Swissroll(SwissrollArgs),
    /// Per-point relative change of a higher-order method over first order.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ClassifierKind {
    Halfspace,
    Slab,
    Constant,
    Nn,
    External,
}

#[derive(Clone, Debug, Args)]
pub struct ClassifierArgs {
    #[arg(long, value_enum)]
    pub classifier: ClassifierKind,
    /// Normal vector for halfspace and slab, comma separated.
    #[arg(long, value_parser = parse_vector, allow_hyphen_values = true)]
    pub w: Option<Coords>,
    /// Halfspace offset: class 1 where w·z <= b.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Slab lower face (may be -inf).
    #[arg(long, allow_hyphen_values = true)]
    pub lo: Option<f64>,
    /// Slab upper face (may be inf).
    #[arg(long, allow_hyphen_values = true)]
    pub hi: Option<f64>,
    /// Label returned by the constant classifier.
    #[arg(long)]
    pub label: Option<usize>,
    /// Number of classes of the constant classifier.
    #[arg(long)]
    pub classes: Option<usize>,
    /// Nearest-neighbour training data: CSV rows of coordinates followed by an integer label.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Adapter command line for the external classifier, split on whitespace.
    #[arg(long = "command", allow_hyphen_values = true)]
    pub external_command: Option<String>,
}

#[derive(Clone, Debug, Args)]
pub struct SamplingArgs {
    #[arg(long, value_parser = parse_positive)]
    pub sigma: f64,
    /// Samples for choosing the top class.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub n0: u64,
    /// Classifier evaluations spent on the certificate.
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    /// Total failure probability, in (0, 1).
    #[arg(long, default_value_t = 0.001, value_parser = parse_eta)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, env = "SMOOTHCERT_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
}

impl SamplingArgs {
    pub fn worker_count(&self) -> usize {
        self.workers
            .map(|w| w as usize)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[derive(Clone, Debug, Args)]
pub struct PointArgs {
    /// A point to certify, comma separated; repeatable.
    #[arg(long = "x", value_parser = parse_vector, allow_hyphen_values = true)]
    pub x: Vec<Coords>,
    /// CSV file with one point per row, no header.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// Evenly spaced points `FROM:TO:STEPS`, with FROM and TO comma separated.
    #[arg(long, value_parser = parse_segment, allow_hyphen_values = true)]
    pub grid: Option<Segment>,
}

#[derive(Clone, Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub points: PointArgs,
    #[arg(long, default_value = "first")]
    pub method: Method,
    /// Use the closed-form smoothed quantities instead of sampling.
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    /// Lower bound on the smoothed value against distance.
    Bound,
    /// Certified radius against p, one column per gradient.
    Radius,
}

#[derive(Clone, Debug, Args)]
pub struct CurveArgs {
    #[arg(long, value_enum)]
    pub kind: CurveKind,
    #[arg(long, default_value_t = 1.0, value_parser = parse_positive)]
    pub sigma: f64,
    /// For `bound`: the smoothed value. For `radius`: a range `FROM:TO:STEPS`.
    #[arg(long)]
    pub p: String,
    /// Gradient norm for `bound`.
    #[arg(long, default_value_t = 0.0)]
    pub grad: f64,
    /// Distance range `FROM:TO:STEPS` for `bound`.
    #[arg(long, value_parser = parse_range)]
    pub rho: Option<Range>,
    /// Gradient series for `radius`: numbers, `max`, `max/K` or `F*max`.
    #[arg(long, value_delimiter = ',', value_parser = parse_gradient, default_value = "0,max/2,max")]
    pub grads: Vec<GradientSpec>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Clone, Debug, Args)]
pub struct SwissrollArgs {
    #[arg(long, default_value_t = 0.25, value_parser = parse_positive)]
    pub sigma: f64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub n0: u64,
    #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub n: u64,
    #[arg(long, default_value_t = 0.001, value_parser = parse_eta)]
    pub eta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, env = "SMOOTHCERT_WORKERS", value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    /// Seed of the dataset, independent of the sampling seed.
    #[arg(long, default_value_t = 0)]
    pub dataset_seed: u64,
    #[arg(long, default_value_t = 400)]
    pub per_class: usize,
    /// Standard deviation of the Gaussian jitter added to each point.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
    /// Coordinates are `scale·t·(cos t, sin t)`.
    #[arg(long, default_value_t = 0.25, value_parser = parse_positive)]
    pub scale: f64,
    /// Test points, taken at an even stride through the dataset.
    #[arg(long, default_value_t = 40)]
    pub test_points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl SwissrollArgs {
    pub fn worker_count(&self) -> usize {
        self.workers
            .map(|w| w as usize)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

#[derive(Clone, Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub classifier: ClassifierArgs,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[command(flatten)]
    pub points: PointArgs,
    /// Method compared against the first-order baseline.
    #[arg(long, default_value = "dipole")]
    pub method: Method,
    /// Give both runs the same seed instead of independent ones.
    #[arg(long)]
    pub same_seed: bool,
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub bins: u64,
    /// Write the aggregate summary (counts and histogram) as JSON here;
    /// otherwise it goes to standard error.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// An inclusive sweep of `steps` values.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Range {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

/// `steps` evenly spaced points on the segment from `from` to `to`.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub steps: usize,
}

impl Segment {
    pub fn points(&self) -> Vec<Vec<f64>> {
        let last = self.steps.saturating_sub(1).max(1) as f64;
        (0..self.steps)
            .map(|i| {
                let s = i as f64 / last;
                self.from.iter().zip(&self.to).map(|(a, b)| a + (b - a) * s).collect()
            })
            .collect()
    }
}

pub fn parse_vector(s: &str) -> Result<Vec<f64>, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad number {v:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if values.iter().any(|v| v.is_nan()) {
        return Err("NaN is not a coordinate".into());
    }
    Ok(values)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive and finite, got {s}"))
    }
}

pub fn parse_eta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("eta must lie strictly between 0 and 1, got {s}"))
    }
}

fn split_triple(s: &str) -> Result<(&str, &str, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected FROM:TO:STEPS, got {s:?}"));
    }
    let steps = parts[2].parse::<usize>().map_err(|e| format!("bad step count {:?}: {e}", parts[2]))?;
    Ok((parts[0], parts[1], steps))
}

pub fn parse_range(s: &str) -> Result<Range, String> {
    let (from, to, steps) = split_triple(s)?;
    let from = from.parse::<f64>().map_err(|e| format!("bad start {from:?}: {e}"))?;
    let to = to.parse::<f64>().map_err(|e| format!("bad end {to:?}: {e}"))?;
    Ok(Range { from, to, steps })
}

fn parse_segment(s: &str) -> Result<Segment, String> {
    let (from, to, steps) = split_triple(s)?;
    let from = parse_vector(from)?;
    let to = parse_vector(to)?;
    if from.len() != to.len() {
        return Err(format!("segment ends differ in dimension: {} vs {}", from.len(), to.len()));
    }
    Ok(Segment { from, to, steps })
}

pub fn parse_gradient(s: &str) -> Result<GradientSpec, String> {
    let s = s.trim();
    if s == "max" {
        return Ok(GradientSpec::FractionOfMax(1.0));
    }
    if let Some(k) = s.strip_prefix("max/") {
        let k: f64 = k.parse().map_err(|e| format!("bad divisor in {s:?}: {e}"))?;
        if !(k > 0.0) {
            return Err(format!("divisor must be positive in {s:?}"));
        }
        return Ok(GradientSpec::FractionOfMax(1.0 / k));
    }
    if let Some(f) = s.strip_suffix("*max") {
        let f: f64 = f.parse().map_err(|e| format!("bad fraction in {s:?}: {e}"))?;
        if !(0.0..=1.0).contains(&f) {
            return Err(format!("fraction must lie in [0, 1] in {s:?}"));
        }
        return Ok(GradientSpec::FractionOfMax(f));
    }
    let g: f64 = s.parse().map_err(|e| format!("bad gradient {s:?}: {e}"))?;
    if !(g >= 0.0 && g.is_finite()) {
        return Err(format!("gradient norm must be non-negative, got {s}"));
    }
    Ok(GradientSpec::Absolute(g))
}
