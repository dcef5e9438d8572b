use serde::{Deserialize, Serialize};

use super::noise::{Domain, NoiseStream};
use super::{run_chunks, SamplingPlan};
use crate::classifiers::BaseClassifier;
use crate::error::{Error, Result};
use crate::estimation::{BinomialObservation, GradientEstimate, PairObservation};

fn check_point<C: BaseClassifier + ?Sized>(classifier: &C, x: &[f64]) -> Result<()> {
    if x.len() != classifier.dim() {
        return Err(Error::DimensionMismatch { expected: classifier.dim(), actual: x.len() });
    }
    Ok(())
}

/// Fills `coords` with `x + ε_i` for `i` in `[start, end)` and classifies them.
fn classify_noisy<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    noise: &NoiseStream,
    start: u64,
    end: u64,
    eps: &mut Vec<f64>,
) -> Result<Vec<usize>> {
    let d = x.len();
    let k = (end - start) as usize;
    eps.resize(k * d, 0.0);
    for (i, e) in eps.chunks_exact_mut(d).enumerate() {
        noise.fill(start + i as u64, e);
    }
    let coords: Vec<f64> = eps.chunks_exact(d).flat_map(|e| e.iter().zip(x).map(|(a, b)| a + b)).collect();
    classifier
        .classify_batch(&coords)
        .map_err(|source| Error::Sampling { sample: start, source })
}

/// Label histogram over `count` samples from the given noise domain.
pub fn sample_class_counts<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    plan: &SamplingPlan,
    count: u64,
    domain: Domain,
) -> Result<Vec<u64>> {
    plan.validate()?;
    check_point(classifier, x)?;
    let classes = classifier.num_classes().max(1);
    let noise = NoiseStream::new(plan.seed, domain, plan.sigma());
    let partials = run_chunks(plan.workers, count, |start, end| {
        let mut eps = Vec::new();
        let labels = classify_noisy(classifier, x, &noise, start, end, &mut eps)?;
        let mut hist = vec![0u64; classes];
        for l in labels {
            if l >= classes {
                hist.resize(l + 1, 0);
            }
            hist[l] += 1;
        }
        Ok(hist)
    })?;
    let mut total = vec![0u64; classes];
    for hist in partials {
        if hist.len() > total.len() {
            total.resize(hist.len(), 0);
        }
        for (t, h) in total.iter_mut().zip(hist) {
            *t += h;
        }
    }
    Ok(total)
}

/// Counts how many of `plan.n` noisy copies of `x` land in `target`.
pub fn sample_counts<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    plan: &SamplingPlan,
    target: usize,
) -> Result<BinomialObservation> {
    plan.validate()?;
    check_point(classifier, x)?;
    let noise = NoiseStream::new(plan.seed, Domain::Estimation, plan.sigma());
    let partials = run_chunks(plan.workers, plan.n, |start, end| {
        let mut eps = Vec::new();
        let labels = classify_noisy(classifier, x, &noise, start, end, &mut eps)?;
        Ok(labels.iter().filter(|&&l| l == target).count() as u64)
    })?;
    BinomialObservation::new(partials.iter().sum(), plan.n)
}

/// Tallies `(f(x+ε), f(x-ε))` over `plan.n / 2` antithetic pairs, so the
/// classifier is evaluated `plan.n` times in total (rounded down to even).
pub fn sample_dipole_pairs<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    plan: &SamplingPlan,
    target: usize,
) -> Result<PairObservation> {
    plan.validate()?;
    check_point(classifier, x)?;
    let pairs = plan.n / 2;
    if pairs == 0 {
        return Err(Error::InvalidPlan("dipole sampling needs n >= 2".into()));
    }
    let d = x.len();
    let noise = NoiseStream::new(plan.seed, Domain::Estimation, plan.sigma());
    let partials = run_chunks(plan.workers, pairs, |start, end| {
        let k = (end - start) as usize;
        let mut eps = vec![0.0; d];
        let mut coords = Vec::with_capacity(2 * k * d);
        for i in start..end {
            noise.fill(i, &mut eps);
            coords.extend(x.iter().zip(&eps).map(|(a, e)| a + e));
            coords.extend(x.iter().zip(&eps).map(|(a, e)| a - e));
        }
        let labels = classifier
            .classify_batch(&coords)
            .map_err(|source| Error::Sampling { sample: start, source })?;
        let mut obs = PairObservation::default();
        for pair in labels.chunks_exact(2) {
            obs.record(pair[0] == target, pair[1] == target);
        }
        Ok(obs)
    })?;
    let mut total = PairObservation::default();
    for p in &partials {
        total.merge(p);
    }
    Ok(total)
}

struct GradientChunk {
    hits: u64,
    dot_sum: f64,
    max_norm_product: f64,
}

/// Draws `plan.n` samples, counts hits of `target` over all of them, and
/// forms `n/2` disjoint pairs `(2i, 2i+1)` for the mean of
/// `(ε f(x+ε))·(ε′ f(x+ε′))`.
pub fn sample_gradient_pairs<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    plan: &SamplingPlan,
    target: usize,
) -> Result<(BinomialObservation, GradientEstimate)> {
    plan.validate()?;
    check_point(classifier, x)?;
    if plan.n % 2 != 0 {
        return Err(Error::InvalidPlan(format!("gradient pairing needs an even n, got {}", plan.n)));
    }
    let d = x.len();
    let noise = NoiseStream::new(plan.seed, Domain::Estimation, plan.sigma());
    let partials = run_chunks(plan.workers, plan.n, |start, end| {
        let mut eps = Vec::new();
        let labels = classify_noisy(classifier, x, &noise, start, end, &mut eps)?;
        let mut chunk = GradientChunk { hits: 0, dot_sum: 0.0, max_norm_product: 0.0 };
        for (pair_eps, pair_labels) in eps.chunks_exact(2 * d).zip(labels.chunks_exact(2)) {
            let (a, b) = pair_eps.split_at(d);
            let fa = pair_labels[0] == target;
            let fb = pair_labels[1] == target;
            chunk.hits += u64::from(fa) + u64::from(fb);
            let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
            chunk.max_norm_product = chunk.max_norm_product.max(na * nb);
            if fa && fb {
                chunk.dot_sum += a.iter().zip(b).map(|(u, v)| u * v).sum::<f64>();
            }
        }
        Ok(chunk)
    })?;
    let mut hits = 0;
    let mut dot_sum = 0.0;
    let mut max_norm_product: f64 = 0.0;
    for c in &partials {
        hits += c.hits;
        dot_sum += c.dot_sum;
        max_norm_product = max_norm_product.max(c.max_norm_product);
    }
    let n_pairs = plan.n / 2;
    let est = GradientEstimate { v_hat: dot_sum / n_pairs as f64, n_pairs, dim: d, max_norm_product };
    Ok((BinomialObservation::new(hits, plan.n)?, est))
}

/// Monte-Carlo estimate of `∇p = σ⁻² E[ε f(x+ε)]` with per-coordinate
/// standard errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientMean {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
}

impl GradientMean {
    /// Projection onto `direction` and its standard error.
    ///
    /// The error treats coordinates as independent, which is exact for the
    /// projection of Gaussian noise onto a unit vector only up to the
    /// correlation induced by `f`; callers use it as a tolerance scale.
    pub fn project(&self, direction: &[f64]) -> (f64, f64) {
        let n: f64 = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        let value = self.mean.iter().zip(direction).map(|(m, u)| m * u / n).sum();
        let var: f64 = self.std_err.iter().zip(direction).map(|(s, u)| (s * u / n).powi(2)).sum();
        (value, var.sqrt())
    }
}

pub fn sample_gradient_vector<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    plan: &SamplingPlan,
    target: usize,
) -> Result<GradientMean> {
    plan.validate()?;
    check_point(classifier, x)?;
    let d = x.len();
    let noise = NoiseStream::new(plan.seed, Domain::Estimation, plan.sigma());
    let partials = run_chunks(plan.workers, plan.n, |start, end| {
        let mut eps = Vec::new();
        let labels = classify_noisy(classifier, x, &noise, start, end, &mut eps)?;
        let mut sum = vec![0.0; d];
        let mut sq = vec![0.0; d];
        for (e, &l) in eps.chunks_exact(d).zip(&labels) {
            if l == target {
                for j in 0..d {
                    sum[j] += e[j];
                    sq[j] += e[j] * e[j];
                }
            }
        }
        Ok((sum, sq))
    })?;
    let mut sum = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for (s, q) in &partials {
        for j in 0..d {
            sum[j] += s[j];
            sq[j] += q[j];
        }
    }
    let n = plan.n as f64;
    let s2 = plan.sigma() * plan.sigma();
    let mean: Vec<f64> = sum.iter().map(|s| s / n / s2).collect();
    let std_err = sum
        .iter()
        .zip(&sq)
        .map(|(s, q)| {
            let m = s / n;
            let var = (q / n - m * m).max(0.0) * n / (n - 1.0).max(1.0);
            (var / n).sqrt() / s2
        })
        .collect();
    Ok(GradientMean { mean, std_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::SmoothingParams;
    use crate::classifiers::{Constant, Halfspace, Slab};

    fn plan(n: u64, sigma: f64, seed: u64) -> SamplingPlan {
        SamplingPlan::new(100, n, SmoothingParams::new(sigma).unwrap(), seed)
    }

    #[test]
    fn constant_classifiers_count_exactly() {
        let one = Constant { dim: 3, label: 1, classes: 2 };
        let zero = Constant { dim: 3, label: 0, classes: 2 };
        let p = plan(10_001, 1.0, 3);
        assert_eq!(sample_counts(&one, &[0.0; 3], &p, 1).unwrap().successes(), 10_001);
        assert_eq!(sample_counts(&zero, &[0.0; 3], &p, 1).unwrap().successes(), 0);

        let pairs = sample_dipole_pairs(&one, &[0.0; 3], &p, 1).unwrap();
        assert_eq!((pairs.n11, pairs.pairs()), (5000, 5000));

        let p = plan(10_000, 1.0, 3);
        let (_, est) = sample_gradient_pairs(&zero, &[0.0; 3], &p, 1).unwrap();
        assert_eq!(est.v_hat, 0.0);
        let (obs, est) = sample_gradient_pairs(&one, &[0.0; 3], &p, 1).unwrap();
        assert_eq!(obs.successes(), 10_000);
        // E[ε·ε′] = 0 with sd sqrt(d)σ² per pair.
        assert!(est.v_hat.abs() < 5.0 * 3f64.sqrt() / (5000f64).sqrt());
        assert!(est.v_hat.abs() <= est.max_norm_product);
    }

    #[test]
    fn odd_n_rejected_for_gradient_pairs() {
        let one = Constant { dim: 1, label: 1, classes: 2 };
        assert!(sample_gradient_pairs(&one, &[0.0], &plan(11, 1.0, 0), 1).is_err());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let one = Constant { dim: 2, label: 1, classes: 2 };
        assert!(matches!(sample_counts(&one, &[0.0], &plan(10, 1.0, 0), 1), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn boundary_halfspace_has_no_symmetric_mass() {
        let h = Halfspace::new(vec![1.0, 2.0], 0.0).unwrap();
        let pairs = sample_dipole_pairs(&h, &[0.0, 0.0], &plan(20_000, 1.0, 5), 1).unwrap();
        assert_eq!(pairs.n11, 0);
    }

    #[test]
    fn symmetric_slab_pairs_agree() {
        let s = Slab::new(vec![1.0], -1.2816, 1.2816).unwrap();
        let pairs = sample_dipole_pairs(&s, &[0.0], &plan(200_000, 1.0, 9), 1).unwrap();
        assert_eq!(pairs.n10, 0);
        assert_eq!(pairs.n01, 0);
        let cs = pairs.n11 as f64 / pairs.pairs() as f64;
        assert!((cs - 0.8).abs() < 5.0 * (0.8f64 * 0.2 / 100_000.0).sqrt());
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let h = Halfspace::new(vec![0.5, -1.0, 0.25], 0.3).unwrap();
        let x = [0.1, 0.0, -0.2];
        let base = plan(30_000, 0.5, 42);
        let reference = sample_gradient_pairs(&h, &x, &base, 1).unwrap();
        for workers in [2, 3, 8] {
            let p = base.with_workers(workers);
            let got = sample_gradient_pairs(&h, &x, &p, 1).unwrap();
            assert_eq!(got.0, reference.0);
            assert_eq!(got.1.v_hat.to_bits(), reference.1.v_hat.to_bits());
            assert_eq!(sample_dipole_pairs(&h, &x, &p, 1).unwrap(), sample_dipole_pairs(&h, &x, &base, 1).unwrap());
        }
    }
}
