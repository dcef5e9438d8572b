use serde::{Deserialize, Serialize};

use super::{check_dim, dot, norm, BaseClassifier, ClassifierError};
use crate::certificates::{max_gradient_norm, solve_a_prime, DipoleEvidence, SmoothingParams, GRADIENT_CLAMP_TOL};
use crate::error::{Error, Result};
use crate::normal::{cdf, std_cdf, std_pdf, std_quantile, Probability};

/// Exact smoothed value and gradient norm of the class-1 indicator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedValue {
    pub p: Probability,
    pub grad_norm: f64,
}

/// Classifiers whose Gaussian smoothing has a closed form.
pub trait AnalyticSmoothing: BaseClassifier {
    fn smoothed(&self, x: &[f64], params: SmoothingParams) -> Result<SmoothedValue>;

    /// Exact `C^S` and `C^N` of the class-1 indicator at `x`.
    fn dipole_masses(&self, x: &[f64], params: SmoothingParams) -> Result<DipoleEvidence>;
}

fn check(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, actual: x.len() });
    }
    Ok(())
}

/// Class 1 on `{z : w·z <= b}`, class 0 elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    w: Vec<f64>,
    b: f64,
}

impl Halfspace {
    pub fn new(w: Vec<f64>, b: f64) -> Result<Self> {
        let n = norm(&w);
        if !(n > 0.0 && n.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidClassifier("halfspace needs a finite non-zero normal and finite offset".into()));
        }
        Ok(Halfspace { w, b })
    }

    pub fn normal(&self) -> &[f64] {
        &self.w
    }

    pub fn offset(&self) -> f64 {
        self.b
    }

    /// Signed distance from `x` to the boundary, positive on the class-1 side.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        (self.b - dot(&self.w, x)) / norm(&self.w)
    }
}

impl BaseClassifier for Halfspace {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn classify(&self, z: &[f64]) -> Result<usize, ClassifierError> {
        check_dim(self.w.len(), z)?;
        Ok(usize::from(dot(&self.w, z) <= self.b))
    }
}

impl AnalyticSmoothing for Halfspace {
    fn smoothed(&self, x: &[f64], params: SmoothingParams) -> Result<SmoothedValue> {
        check(self.dim(), x)?;
        let p = std_cdf(self.signed_distance(x) / params.sigma());
        Ok(SmoothedValue { p, grad_norm: max_gradient_norm(p, params) })
    }

    fn dipole_masses(&self, x: &[f64], params: SmoothingParams) -> Result<DipoleEvidence> {
        check(self.dim(), x)?;
        // Both x+ε and x-ε are inside iff the projected noise lies in [-u, u].
        let u = self.signed_distance(x) / params.sigma();
        let p = std_cdf(u);
        let cs = if u > 0.0 { 1.0 - 2.0 * cdf(-u) } else { 0.0 };
        DipoleEvidence::new(Probability::saturating(cs), Probability::saturating(p.value() - cs))
    }
}

/// Class 1 on `{z : lo <= w·z <= hi}`. Either bound may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    w: Vec<f64>,
    lo: f64,
    hi: f64,
}

impl Slab {
    pub fn new(w: Vec<f64>, lo: f64, hi: f64) -> Result<Self> {
        let n = norm(&w);
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidClassifier("slab needs a finite non-zero normal".into()));
        }
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidClassifier(format!("slab bounds must satisfy lo < hi, got [{lo}, {hi}]")));
        }
        Ok(Slab { w, lo, hi })
    }

    pub fn normal(&self) -> &[f64] {
        &self.w
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    // Standardized distances from x to the two faces along w.
    fn standardized(&self, x: &[f64], params: SmoothingParams) -> (f64, f64, f64) {
        let s = dot(&self.w, x);
        let scale = params.sigma() * norm(&self.w);
        (s, (self.lo - s) / scale, (self.hi - s) / scale)
    }
}

impl BaseClassifier for Slab {
    fn dim(&self) -> usize {
        self.w.len()
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn classify(&self, z: &[f64]) -> Result<usize, ClassifierError> {
        check_dim(self.w.len(), z)?;
        let s = dot(&self.w, z);
        Ok(usize::from(self.lo <= s && s <= self.hi))
    }
}

/// `Φ(hi) - Φ(lo)`, evaluated on the tail that keeps precision.
fn normal_mass(lo: f64, hi: f64) -> Probability {
    if lo >= hi {
        return Probability::ZERO;
    }
    if lo > 0.0 {
        Probability::saturating(cdf(-lo) - cdf(-hi))
    } else if hi < 0.0 {
        Probability::saturating(cdf(hi) - cdf(lo))
    } else {
        // Straddles zero: keep the complement exact.
        let outside = cdf(lo) + cdf(-hi);
        Probability::from_complement(outside.clamp(0.0, 1.0)).unwrap_or(Probability::ONE)
    }
}

impl AnalyticSmoothing for Slab {
    fn smoothed(&self, x: &[f64], params: SmoothingParams) -> Result<SmoothedValue> {
        check(self.dim(), x)?;
        let (_, alpha, beta) = self.standardized(x, params);
        let p = normal_mass(alpha, beta);
        let grad_norm = (std_pdf(alpha) - std_pdf(beta)).abs() / params.sigma();
        Ok(SmoothedValue { p, grad_norm })
    }

    fn dipole_masses(&self, x: &[f64], params: SmoothingParams) -> Result<DipoleEvidence> {
        check(self.dim(), x)?;
        let (_, alpha, beta) = self.standardized(x, params);
        // x+ε inside: e ∈ [alpha, beta]; x-ε inside: e ∈ [-beta, -alpha].
        let cs = normal_mass(alpha.max(-beta), beta.min(-alpha));
        let p = normal_mass(alpha, beta);
        DipoleEvidence::new(cs, Probability::saturating(p.value() - cs.value()))
    }
}

/// A classifier returning the same label everywhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Constant {
    pub dim: usize,
    pub label: usize,
    pub classes: usize,
}

impl BaseClassifier for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_classes(&self) -> usize {
        self.classes.max(self.label + 1)
    }

    fn classify(&self, z: &[f64]) -> Result<usize, ClassifierError> {
        check_dim(self.dim, z)?;
        Ok(self.label)
    }
}

/// The slab realizing equality in the second-order bound for `(p, grad_norm)`.
///
/// Its normal is `direction` (normalized), and `x` sits at anchor mass `a′`
/// from the lower face: moving `x` along `direction` by the second-order
/// radius brings the smoothed value to exactly one half. At the maximum
/// gradient the lower face is at `-∞`, i.e. the slab is a halfspace.
pub fn worst_case_slab(
    p: Probability,
    grad_norm: f64,
    x: &[f64],
    direction: &[f64],
    params: SmoothingParams,
) -> Result<Slab> {
    check(direction.len(), x)?;
    let pv = p.value();
    if !(pv > 0.0 && pv < 1.0) {
        return Err(Error::InvalidProbability(pv));
    }
    let max = max_gradient_norm(p, params);
    if grad_norm < 0.0 || grad_norm > max + GRADIENT_CLAMP_TOL {
        return Err(Error::InfeasibleEvidence { p: pv, grad_norm, max });
    }
    let n = norm(direction);
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidClassifier("worst-case direction must be non-zero".into()));
    }
    let w: Vec<f64> = direction.iter().map(|v| v / n).collect();
    let s = dot(&w, x);
    let a = solve_a_prime(p, grad_norm.min(max), params);
    let upper = Probability::from_complement((p.complement() - a.value()).max(0.0)).unwrap_or(Probability::ONE);
    let sigma = params.sigma();
    Slab::new(w, s + sigma * std_quantile(a), s + sigma * std_quantile(upper))
}
