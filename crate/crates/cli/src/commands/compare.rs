use std::io::Write;

use anyhow::{Context, Result};
use serde::Serialize;
use smoothcert::certificates::{Method, SmoothingParams};
use smoothcert::engine::{certify, SamplingPlan};

use super::collect_points;
use crate::args::CompareArgs;
use crate::classifier;
use crate::table::{Cell, Format, Table};
use crate::{map_points, point_seed, with_output, UsageError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Both,
    FirstOnly,
    HigherOnly,
    Neither,
}

impl Status {
    fn of(first: bool, higher: bool) -> Self {
        match (first, higher) {
            (true, true) => Status::Both,
            (true, false) => Status::FirstOnly,
            (false, true) => Status::HigherOnly,
            (false, false) => Status::Neither,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Status::Both => "both",
            Status::FirstOnly => "first_only",
            Status::HigherOnly => "higher_only",
            Status::Neither => "neither",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

/// Distribution of relative changes over the points both methods certify.
/// Points certified by one side only, or by neither, are counted but left
/// out of the distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub method: Method,
    pub points: usize,
    pub both: usize,
    pub first_only: usize,
    pub higher_only: usize,
    pub neither: usize,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    pub mean_relative_change: Option<f64>,
    pub min_relative_change: Option<f64>,
    pub max_relative_change: Option<f64>,
    pub histogram: Vec<Bin>,
}

struct Pair {
    seed_first: u64,
    seed_higher: u64,
    radius_first: f64,
    radius_higher: f64,
    certified_first: bool,
    certified_higher: bool,
}

impl Pair {
    fn status(&self) -> Status {
        Status::of(self.certified_first, self.certified_higher)
    }

    fn relative_change(&self) -> Option<f64> {
        (self.status() == Status::Both).then(|| (self.radius_higher - self.radius_first) / self.radius_first)
    }
}

pub fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let points = collect_points(&args.points)?;
    let dim = points[0].len();
    let s = &args.sampling;
    let params = SmoothingParams::new(s.sigma).map_err(|e| UsageError(e.to_string()))?;
    let workers = s.worker_count();
    let built = classifier::build(&args.classifier, dim, workers)?;
    if built.base().dim() != dim {
        return Err(UsageError(format!("classifier has dimension {}, points have {dim}", built.base().dim())).into());
    }

    let pairs = map_points(points.len(), workers, |i, inner| {
        let seed_first = point_seed(s.seed, i as u64, 0);
        let seed_higher = if args.same_seed { seed_first } else { point_seed(s.seed, i as u64, 1) };
        let plan = |seed| SamplingPlan::new(s.n0, s.n, params, seed).with_workers(inner);
        let first = certify(built.base(), &points[i], &plan(seed_first), s.eta, Method::First)?;
        let higher = certify(built.base(), &points[i], &plan(seed_higher), s.eta, args.method)?;
        Ok(Pair {
            seed_first,
            seed_higher,
            radius_first: first.certificate.radius,
            radius_higher: higher.certificate.radius,
            certified_first: !first.certificate.abstained,
            certified_higher: !higher.certificate.abstained,
        })
    });
    built.close()?;
    let pairs = pairs?;

    let echo = classifier::echo(&args.classifier);
    let mut columns: Vec<&str> = vec!["point"];
    columns.extend(echo.iter().map(|(k, _)| *k));
    columns.extend([
        "x",
        "sigma",
        "n0",
        "n",
        "eta",
        "method",
        "seed_first",
        "seed_higher",
        "radius_first",
        "radius_higher",
        "status",
        "relative_change",
    ]);
    let mut table = Table::new(columns);
    for (i, (x, p)) in points.iter().zip(&pairs).enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(echo.iter().map(|(_, v)| v.clone()));
        row.extend([
            x.clone().into(),
            s.sigma.into(),
            s.n0.into(),
            s.n.into(),
            s.eta.into(),
            args.method.as_str().into(),
            p.seed_first.into(),
            p.seed_higher.into(),
            p.radius_first.into(),
            p.radius_higher.into(),
            p.status().as_str().into(),
            p.relative_change().into(),
        ]);
        table.push(row);
    }

    let summary = summarize(args.method, &pairs, args.bins as usize);
    with_output(args.output.output.as_deref(), out, |w| table.write(args.output.format.unwrap_or(Format::Csv), w))?;
    let json = serde_json::to_string(&summary)?;
    match &args.summary {
        Some(path) => std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?,
        None => eprintln!("{json}"),
    }
    Ok(())
}

fn summarize(method: Method, pairs: &[Pair], bins: usize) -> Summary {
    let count = |st: Status| pairs.iter().filter(|p| p.status() == st).count();
    let changes: Vec<f64> = pairs.iter().filter_map(Pair::relative_change).collect();
    let min = changes.iter().copied().reduce(f64::min);
    let max = changes.iter().copied().reduce(f64::max);
    let histogram = match (min, max) {
        (Some(lo), Some(hi)) => histogram(&changes, lo, hi, bins),
        _ => Vec::new(),
    };
    Summary {
        method,
        points: pairs.len(),
        both: count(Status::Both),
        first_only: count(Status::FirstOnly),
        higher_only: count(Status::HigherOnly),
        neither: count(Status::Neither),
        positive: changes.iter().filter(|&&c| c > 0.0).count(),
        negative: changes.iter().filter(|&&c| c < 0.0).count(),
        zero: changes.iter().filter(|&&c| c == 0.0).count(),
        mean_relative_change: (!changes.is_empty()).then(|| changes.iter().sum::<f64>() / changes.len() as f64),
        min_relative_change: min,
        max_relative_change: max,
        histogram,
    }
}

fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<Bin> {
    let (lo, hi) = if hi - lo < 1e-12 { (lo - 0.5, hi + 0.5) } else { (lo, hi) };
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<Bin> = (0..bins)
        .map(|b| Bin { lo: lo + width * b as f64, hi: if b + 1 == bins { hi } else { lo + width * (b + 1) as f64 }, count: 0 })
        .collect();
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        out[b].count += 1;
    }
    out
}
