//! Monte-Carlo estimates against closed-form oracles.
//!
//! Every tolerance here is a multiple of a standard error, so each check
//! is a seeded statistical test with a negligible false-alarm rate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use smoothcert::certificates::SmoothingParams;
use smoothcert::classifiers::{AnalyticSmoothing, Halfspace, Slab};
use smoothcert::engine::{
    sample_counts, sample_dipole_pairs, sample_gradient_pairs, sample_gradient_vector, SamplingPlan,
};
use smoothcert::estimation::{binomial_lower_bound, gradient_deviation_t, BinomialObservation};
use smoothcert::normal::{std_pdf, Probability};

fn params(sigma: f64) -> SmoothingParams {
    SmoothingParams::new(sigma).unwrap()
}

fn unit_halfspace(d: usize) -> Halfspace {
    let mut w = vec![0.0; d];
    w[0] = 1.0;
    Halfspace::new(w, 1.0).unwrap()
}

#[test]
fn halfspace_and_slab_counts_match_oracle() {
    let h = unit_halfspace(4);
    let x = vec![0.0; 4];
    let plan = SamplingPlan::new(1, 1_000_000, params(1.0), 11).with_workers(4);
    let p = h.smoothed(&x, plan.params).unwrap().p.value();
    assert!((p - 0.841_345).abs() < 1e-6);
    let obs = sample_counts(&h, &x, &plan, 1).unwrap();
    let tol = 4.0 * (p * (1.0 - p) / plan.n as f64).sqrt();
    assert!((obs.point_estimate() - p).abs() <= tol, "halfspace {} vs {p}", obs.point_estimate());

    let slab = Slab::new(vec![0.6, 0.8, 0.0], -0.3, 0.9).unwrap();
    let x = vec![0.1, -0.2, 0.5];
    let plan = SamplingPlan::new(1, 1_000_000, params(0.5), 12).with_workers(4);
    let p = slab.smoothed(&x, plan.params).unwrap().p.value();
    let obs = sample_counts(&slab, &x, &plan, 1).unwrap();
    let tol = 4.0 * (p * (1.0 - p) / plan.n as f64).sqrt();
    assert!((obs.point_estimate() - p).abs() <= tol, "slab {} vs {p}", obs.point_estimate());
}

#[test]
fn finite_differences_match_analytic_gradient() {
    let sigma = 0.7;
    let h = Halfspace::new(vec![0.3, -1.1, 0.4], 0.2).unwrap();
    let x = [0.05, 0.1, -0.2];
    let g = h.smoothed(&x, params(sigma)).unwrap().grad_norm;
    let step = 1e-4;
    let mut fd = [0.0; 3];
    for j in 0..3 {
        let mut up = x;
        let mut down = x;
        up[j] += step;
        down[j] -= step;
        let pu = h.smoothed(&up, params(sigma)).unwrap().p.value();
        let pd = h.smoothed(&down, params(sigma)).unwrap().p.value();
        fd[j] = (pu - pd) / (2.0 * step);
    }
    let fd_norm = fd.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((fd_norm - g).abs() <= 1e-5, "fd {fd_norm} analytic {g}");
}

#[test]
fn monte_carlo_gradient_matches_analytic() {
    let h = unit_halfspace(3);
    let x = vec![0.2, 0.0, 0.0];
    let plan = SamplingPlan::new(1, 100_000, params(1.0), 5).with_workers(2);
    let exact = h.smoothed(&x, plan.params).unwrap().grad_norm;
    let mean = sample_gradient_vector(&h, &x, &plan, 1).unwrap();
    // Class 1 lies on the negative side of w, so the gradient points along -w.
    let (along, se) = mean.project(&[-1.0, 0.0, 0.0]);
    assert!((along - exact).abs() <= 5.0 * se, "mc {along} ± {se} vs {exact}");
    for j in 1..3 {
        assert!(mean.mean[j].abs() <= 5.0 * mean.std_err[j]);
    }
}

#[test]
fn pair_statistic_is_unbiased_for_squared_gradient() {
    let d = 10;
    let h = unit_halfspace(d);
    let x = vec![0.0; d];
    let plan = SamplingPlan::new(1, 200_000, params(1.0), 21).with_workers(4);
    let (_, est) = sample_gradient_pairs(&h, &x, &plan, 1).unwrap();
    let expected = std_pdf(1.0).powi(2);
    // Each pair term is bounded in second moment by E[(ε·ε′)²] = dσ⁴.
    let se = (d as f64 / est.n_pairs as f64).sqrt();
    assert!((est.v_hat - expected).abs() <= 5.0 * se, "{} vs {expected}", est.v_hat);
}

#[test]
fn dipole_masses_add_up_and_are_symmetric() {
    let slab = Slab::new(vec![1.0, 0.0], -0.4, 1.5).unwrap();
    let x = vec![0.2, 0.0];
    let plan = SamplingPlan::new(1, 400_000, params(1.0), 31).with_workers(4);
    let pairs = sample_dipole_pairs(&slab, &x, &plan, 1).unwrap();
    let counts = sample_counts(&slab, &x, &plan.with_workers(1), 1).unwrap();
    let n = pairs.pairs() as f64;
    let p = counts.point_estimate();
    let from_pairs = (pairs.n11 + pairs.n10) as f64 / n;
    let se = (p * (1.0 - p) / n + p * (1.0 - p) / plan.n as f64).sqrt();
    assert!((from_pairs - p).abs() <= 5.0 * se, "{from_pairs} vs {p}");

    let asym = (pairs.n10 as f64 - pairs.n01 as f64).abs() / n;
    assert!(asym <= 5.0 * (2.0 * (pairs.n10 + pairs.n01) as f64).sqrt() / n);

    let exact = slab.dipole_masses(&x, plan.params).unwrap();
    let cs = pairs.n11 as f64 / n;
    let cn = pairs.n10 as f64 / n;
    let cs_v = exact.cs.value();
    let cn_v = exact.cn.value();
    assert!((cs - cs_v).abs() <= 5.0 * (cs_v * (1.0 - cs_v) / n).sqrt());
    assert!((cn - cn_v).abs() <= 5.0 * (cn_v * (1.0 - cn_v) / n).sqrt());
}

#[test]
fn gradient_deviation_covers_at_nominal_rate() {
    let d = 10;
    let h = unit_halfspace(d);
    let x = vec![0.0; d];
    let truth = std_pdf(1.0).powi(2);
    let eta = 0.05;
    let trials = 1000;
    let mut misses = 0;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for trial in 0..trials {
        let plan = SamplingPlan::new(1, 2000, params(1.0), 10_000 + trial);
        let (_, est) = sample_gradient_pairs(&h, &x, &plan, 1).unwrap();
        let t = gradient_deviation_t(est.n_pairs, d, plan.params, eta).unwrap();
        if truth - est.v_hat >= t {
            misses += 1;
        }
        sum += est.v_hat;
        sum_sq += est.v_hat * est.v_hat;
    }
    let n = trials as f64;
    let slack = 3.0 * (eta * (1.0 - eta) / n).sqrt();
    assert!(misses as f64 / n <= eta + slack);
    let mean = sum / n;
    let se = ((sum_sq / n - mean * mean) / (n - 1.0)).sqrt();
    assert!((mean - truth).abs() <= 4.0 * se, "mean {mean} ± {se} vs {truth}");
}

#[test]
fn clopper_pearson_covers_at_nominal_rate() {
    let (p, n, alpha, trials) = (0.7, 500, 0.05, 2000);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let dist = Binomial::new(n, p).unwrap();
    let mut misses = 0;
    for _ in 0..trials {
        let k = dist.sample(&mut rng);
        let lb = binomial_lower_bound(BinomialObservation::new(k, n).unwrap(), alpha).unwrap();
        if lb.value() > p {
            misses += 1;
        }
    }
    let slack = 3.0 * (alpha * (1.0 - alpha) / trials as f64).sqrt();
    assert!(misses as f64 / trials as f64 <= alpha + slack, "{misses} misses");
}

#[test]
fn clopper_pearson_monotone() {
    let n = 300;
    let mut prev = Probability::ZERO.value();
    for k in 0..=n {
        let lb = binomial_lower_bound(BinomialObservation::new(k, n).unwrap(), 0.01).unwrap().value();
        assert!(lb >= prev, "k={k}");
        prev = lb;
    }
    let obs = BinomialObservation::new(240, n).unwrap();
    let mut prev = 0.0;
    for alpha in [1e-6, 1e-4, 1e-3, 0.01, 0.05, 0.2, 0.5] {
        let lb = binomial_lower_bound(obs, alpha).unwrap().value();
        assert!(lb >= prev, "alpha={alpha}");
        prev = lb;
    }
}
