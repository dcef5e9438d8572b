//! High-probability bounds from Monte-Carlo counts and pair statistics.
//!
//! Counts become one-sided Clopper–Pearson lower bounds. The squared
//! gradient norm comes from the mean of pairwise dot products
//! `(ε f(x+ε))·(ε′ f(x+ε′))`, whose expectation is `σ⁴‖∇p‖²`. It is
//! inflated by a sub-exponential deviation allowance `t` so that the
//! resulting norm is an upper confidence value, since the second-order
//! radius decreases with the gradient norm.

use serde::{Deserialize, Serialize};
use libm::lgamma as ln_gamma;

use crate::certificates::{max_gradient_norm, DipoleEvidence, SmoothingParams};
use crate::error::{Error, Result};
use crate::normal::Probability;
use crate::roots::bisect_increasing;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinomialObservation {
    successes: u64,
    trials: u64,
}

impl BinomialObservation {
    pub fn new(successes: u64, trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidObservation("trials must be positive".into()));
        }
        if successes > trials {
            return Err(Error::InvalidObservation(format!("{successes} successes out of {trials} trials")));
        }
        Ok(BinomialObservation { successes, trials })
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn point_estimate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Joint outcomes of `(f(x+ε), f(x-ε))` over antithetic pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairObservation {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl PairObservation {
    pub fn pairs(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    pub fn record(&mut self, plus: bool, minus: bool) {
        match (plus, minus) {
            (true, true) => self.n11 += 1,
            (true, false) => self.n10 += 1,
            (false, true) => self.n01 += 1,
            (false, false) => self.n00 += 1,
        }
    }

    pub fn merge(&mut self, other: &PairObservation) {
        self.n11 += other.n11;
        self.n10 += other.n10;
        self.n01 += other.n01;
        self.n00 += other.n00;
    }
}

/// Mean pairwise dot product over `n_pairs` disjoint pairs in `dim` dimensions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub v_hat: f64,
    pub n_pairs: u64,
    pub dim: usize,
    /// Largest `‖ε‖·‖ε′‖` seen while accumulating; bounds `|v_hat|`.
    pub max_norm_product: f64,
}

/// Failure probability split across simultaneously estimated statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceBudget {
    eta: f64,
    split: Vec<(String, f64)>,
}

impl ConfidenceBudget {
    pub fn new(eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidProbability(eta));
        }
        Ok(ConfidenceBudget { eta, split: Vec::new() })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn remaining(&self) -> f64 {
        self.eta - self.allocated()
    }

    pub fn allocated(&self) -> f64 {
        self.split.iter().map(|(_, a)| a).sum()
    }

    pub fn split(&self) -> &[(String, f64)] {
        &self.split
    }

    /// Reserves `amount` for the named statistic.
    pub fn allocate(&mut self, name: &str, amount: f64) -> Result<f64> {
        let remaining = self.remaining();
        // Halving twice is exact in binary floating point, so the slack only
        // absorbs sums like η/3 + η/3 + η/3.
        if !(amount > 0.0) || amount > remaining * (1.0 + 1e-12) {
            return Err(Error::BudgetExceeded { eta: self.eta, requested: amount, remaining });
        }
        self.split.push((name.to_string(), amount));
        Ok(amount)
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
///
/// Continued fraction (modified Lentz) on whichever side converges, with an
/// iteration cap large enough for `a, b` in the hundreds of millions.
pub fn regularized_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    if x < (a + 1.0) / (a + b + 2.0) {
        (ln_front.exp() * beta_fraction(a, b, x) / a).min(1.0)
    } else {
        (1.0 - ln_front.exp() * beta_fraction(b, a, 1.0 - x) / b).max(0.0)
    }
}

fn beta_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let max_iter = 200 + 20 * (a.max(b).sqrt() as usize);
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// `Pr[Binomial(n, p) >= k]`.
pub fn binomial_upper_tail(k: u64, n: u64, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > n {
        return 0.0;
    }
    regularized_beta(k as f64, (n - k + 1) as f64, p)
}

/// One-sided exact (Clopper–Pearson) lower confidence bound.
///
/// Returns `p_lb` solving `Pr[Binomial(trials, p_lb) >= successes] = alpha`,
/// so the true success probability lies below `p_lb` with probability at
/// most `alpha`.
pub fn binomial_lower_bound(obs: BinomialObservation, alpha: f64) -> Result<Probability> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidProbability(alpha));
    }
    let (k, n) = (obs.successes, obs.trials);
    if k == 0 {
        return Ok(Probability::ZERO);
    }
    if k == n {
        return Probability::new((alpha.ln() / n as f64).exp());
    }
    let (lo, _) = bisect_increasing(|p| binomial_upper_tail(k, n, p) - alpha, 0.0, obs.point_estimate(), 0.0, 200);
    Probability::new(lo)
}

/// Deviation allowance `t` with `Pr[E[V] - Ṽ >= t] <= eta` for `n_pairs`
/// disjoint pairs in dimension `dim`.
pub fn gradient_deviation_t(n_pairs: u64, dim: usize, params: SmoothingParams, eta: f64) -> Result<f64> {
    if n_pairs == 0 || dim == 0 {
        return Err(Error::InvalidObservation("gradient deviation needs n_pairs >= 1 and dim >= 1".into()));
    }
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidProbability(eta));
    }
    let n = n_pairs as f64;
    let d = dim as f64;
    let s2 = params.sigma() * params.sigma();
    let log_eta = eta.ln();
    Ok(if -2.0 * log_eta <= d * n {
        4.0 * s2 * (-(d / n) * log_eta).sqrt()
    } else {
        -(4.0 * std::f64::consts::SQRT_2 * s2 / n) * log_eta
    })
}

/// Gradient norm from an upper value of `σ⁴‖∇p‖²`, capped at the physical
/// maximum for the smoothed value `p_lb`.
pub fn gradient_norm_from_moment(v_upper: f64, params: SmoothingParams, p_lb: Probability) -> f64 {
    let s2 = params.sigma() * params.sigma();
    let norm = v_upper.max(0.0).sqrt() / s2;
    norm.min(max_gradient_norm(p_lb, params))
}

/// Upper confidence value of `‖∇p‖₂`, holding with probability at least
/// `1 - eta_alloc`.
pub fn gradient_norm_upper_bound(
    est: &GradientEstimate,
    params: SmoothingParams,
    eta_alloc: f64,
    p_lb: Probability,
) -> Result<f64> {
    let t = gradient_deviation_t(est.n_pairs, est.dim, params, eta_alloc)?;
    Ok(gradient_norm_from_moment(est.v_hat + t, params, p_lb))
}

/// Lower bounds on `C^S` (from `n11`) and `C^N` (from `n10`), jointly valid
/// with probability at least `1 - eta`.
pub fn dipole_fraction_bounds(obs: &PairObservation, eta: f64) -> Result<DipoleEvidence> {
    let n = obs.pairs();
    let cs = binomial_lower_bound(BinomialObservation::new(obs.n11, n)?, eta / 2.0)?;
    let cn = binomial_lower_bound(BinomialObservation::new(obs.n10, n)?, eta / 2.0)?;
    DipoleEvidence::new(cs, cn)
}
