//! Two interleaved spirals with a nearest-neighbour base classifier.
//!
//! Class 0 follows `scale·t·(cos t, sin t)` for `t` evenly spaced in
//! `[1.5π, 4.5π]`; class 1 is the same spiral rotated by π. Each point gets
//! independent Gaussian jitter. Points are stored class by class, so an
//! even stride through the dataset picks test points from both spirals.
//!
//! Test points are split at the median centrality into a `center` and an
//! `edge` group, and each row carries the mean gain of its group.

use std::f64::consts::PI;
use std::io::Write;

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use smoothcert::certificates::{Method, SmoothingParams};
use smoothcert::classifiers::LabeledDataset;
use smoothcert::engine::{certify, SamplingPlan};

use crate::args::SwissrollArgs;
use crate::table::{Cell, Format, Table};
use crate::{map_points, point_seed, with_output, UsageError};

pub fn two_spirals(per_class: usize, noise: f64, scale: f64, seed: u64) -> Result<LabeledDataset> {
    if per_class == 0 {
        return Err(UsageError("--per-class must be at least 1".into()).into());
    }
    let jitter = Normal::new(0.0, noise).map_err(|e| UsageError(format!("bad --noise {noise}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(2 * per_class);
    let mut labels = Vec::with_capacity(2 * per_class);
    let last = (per_class - 1).max(1) as f64;
    for class in 0..2 {
        let rotation = PI * class as f64;
        for j in 0..per_class {
            let t = 1.5 * PI + 3.0 * PI * j as f64 / last;
            let angle = t + rotation;
            points.push(vec![
                scale * t * angle.cos() + jitter.sample(&mut rng),
                scale * t * angle.sin() + jitter.sample(&mut rng),
            ]);
            labels.push(class);
        }
    }
    Ok(LabeledDataset::from_points(&points, labels)?)
}

struct PointResult {
    class: usize,
    radius_first: f64,
    radius_second: f64,
}

pub fn cmd_swissroll(args: &SwissrollArgs, out: &mut dyn Write) -> Result<()> {
    let params = SmoothingParams::new(args.sigma).map_err(|e| UsageError(e.to_string()))?;
    let data = two_spirals(args.per_class, args.noise, args.scale, args.dataset_seed)?;
    let workers = args.worker_count();

    let total = data.len();
    if args.test_points > total {
        return Err(UsageError(format!("--test-points {} exceeds the {total} dataset points", args.test_points)).into());
    }
    let picks: Vec<usize> = (0..args.test_points).map(|i| i * total / args.test_points).collect();

    let results = map_points(picks.len(), workers, |i, inner| {
        let x = data.point(picks[i]);
        let plan = SamplingPlan::new(args.n0, args.n, params, point_seed(args.seed, i as u64, 0)).with_workers(inner);
        let first = certify(&data, x, &plan, args.eta, Method::First)?;
        let second = certify(&data, x, &plan, args.eta, Method::Second)?;
        Ok(PointResult {
            class: second.evidence.class,
            radius_first: first.certificate.radius,
            radius_second: second.certificate.radius,
        })
    })?;

    let centrality: Vec<f64> = picks.iter().map(|&j| centrality(&data, j)).collect();
    let mut sorted = centrality.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted.get(sorted.len() / 2).copied().unwrap_or(0.0);
    let central: Vec<bool> = centrality.iter().map(|&c| c >= median).collect();
    let group_mean = |want: bool| {
        let gains: Vec<f64> = results
            .iter()
            .zip(&central)
            .filter(|(_, &g)| g == want)
            .map(|(r, _)| r.radius_second - r.radius_first)
            .collect();
        gains.iter().sum::<f64>() / gains.len().max(1) as f64
    };
    let (mean_center, mean_edge) = (group_mean(true), group_mean(false));

    let mut table = Table::new([
        "point",
        "x",
        "label",
        "class",
        "radius_first",
        "radius_second",
        "gain",
        "centrality",
        "group",
        "group_mean_gain",
    ]);
    for (i, r) in results.iter().enumerate() {
        let j = picks[i];
        let group = if central[i] { "center" } else { "edge" };
        let mean = if central[i] { mean_center } else { mean_edge };
        table.push(vec![
            i.into(),
            data.point(j).to_vec().into(),
            data.label(j).into(),
            r.class.into(),
            r.radius_first.into(),
            r.radius_second.into(),
            Cell::Float(r.radius_second - r.radius_first),
            centrality[i].into(),
            group.into(),
            mean.into(),
        ]);
    }
    with_output(args.output.output.as_deref(), out, |w| table.write(args.output.format.unwrap_or(Format::Csv), w))
}

/// How evenly point `j` sits between other-class points: the distance to
/// the nearest one divided by the distance to the nearest one on the far
/// side (negative projection onto the first direction). One at the middle
/// of a class band, towards zero where the band is open on one side.
fn centrality(data: &LabeledDataset, j: usize) -> f64 {
    let x = data.point(j);
    let label = data.label(j);
    let others: Vec<&[f64]> = (0..data.len()).filter(|&k| data.label(k) != label).map(|k| data.point(k)).collect();
    let offset = |q: &[f64]| -> Vec<f64> { q.iter().zip(x).map(|(a, b)| a - b).collect() };
    let length = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let Some(near) = others.iter().map(|q| offset(q)).min_by(|a, b| length(a).total_cmp(&length(b))) else {
        return 0.0;
    };
    let far = others
        .iter()
        .map(|q| offset(q))
        .filter(|v| v.iter().zip(&near).map(|(a, b)| a * b).sum::<f64>() < 0.0)
        .map(|v| length(&v))
        .min_by(f64::total_cmp);
    far.map_or(0.0, |f| length(&near) / f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spirals_are_reproducible_and_balanced() {
        let a = two_spirals(50, 0.1, 0.25, 3).unwrap();
        let b = two_spirals(50, 0.1, 0.25, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 100);
        assert_eq!(a.labels().iter().filter(|&&l| l == 1).count(), 50);
        assert_ne!(a, two_spirals(50, 0.1, 0.25, 4).unwrap());
    }

    #[test]
    fn noiseless_spirals_are_point_reflections() {
        let d = two_spirals(10, 0.0, 1.0, 0).unwrap();
        for j in 0..10 {
            let p = d.point(j);
            let q = d.point(10 + j);
            assert!((p[0] + q[0]).abs() < 1e-12 && (p[1] + q[1]).abs() < 1e-12);
        }
        let r = (d.point(0)[0].powi(2) + d.point(0)[1].powi(2)).sqrt();
        assert!((r - 1.5 * PI).abs() < 1e-12);
    }

    #[test]
    fn centrality_of_flanked_and_open_points() {
        let d = LabeledDataset::from_points(&[vec![0.0], vec![-1.0], vec![1.0], vec![3.0], vec![5.0]], vec![0, 1, 1, 0, 1])
            .unwrap();
        assert_eq!(centrality(&d, 0), 1.0);
        assert_eq!(centrality(&d, 3), 1.0);
        let open = LabeledDataset::from_points(&[vec![0.0], vec![1.0], vec![2.0]], vec![0, 1, 1]).unwrap();
        assert_eq!(centrality(&open, 0), 0.0);
    }
}
