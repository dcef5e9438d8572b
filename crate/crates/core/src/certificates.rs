//! Certified radii and worst-case bounds for Gaussian smoothing.
//!
//! Three families are provided:
//!
//! - first order: the bound from the smoothed value `p` alone,
//!   `Φ(Φ⁻¹(p) - ρ/σ)`, with radius `σΦ⁻¹(p)`;
//! - second order: the tight bound given `p` and the gradient norm
//!   `‖∇p‖₂`, located through the anchor mass `a′`;
//! - dipole: the bound given the symmetric mass `C^S = E[f(x+ε)f(x-ε)]`
//!   and the remaining mass `C^N`.
//!
//! Radii solve `bound(ρ) = 1/2` by bisection. All bounds are monotone in
//! `ρ`, so the solver is unconditionally robust. Radii are capped at
//! [`MAX_RADIUS_SIGMAS`] standard deviations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{cdf, std_pdf, std_quantile, Probability};
use crate::roots::{bisect_increasing, last_true_by_doubling};

/// Radii never exceed this many `σ`.
pub const MAX_RADIUS_SIGMAS: f64 = 40.0;

/// Bisection tolerance on the radius, relative to `σ`.
const RADIUS_TOL_SIGMAS: f64 = 1e-10;

/// Tolerance above the physical gradient maximum that is still clamped
/// rather than reported as infeasible.
pub const GRADIENT_CLAMP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    sigma: f64,
}

impl SmoothingParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidSigma(sigma));
        }
        Ok(SmoothingParams { sigma })
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    fn max_radius(&self) -> f64 {
        MAX_RADIUS_SIGMAS * self.sigma
    }
}

/// Smoothed value and gradient norm at a point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderEvidence {
    pub p: Probability,
    pub grad_norm: f64,
}

impl SecondOrderEvidence {
    pub fn new(p: Probability, grad_norm: f64) -> Self {
        SecondOrderEvidence { p, grad_norm: grad_norm.max(0.0) }
    }

    /// The same evidence with the gradient clamped to its physical maximum.
    pub fn clamped(self, params: SmoothingParams) -> Self {
        let max = max_gradient_norm(self.p, params);
        SecondOrderEvidence { p: self.p, grad_norm: self.grad_norm.clamp(0.0, max) }
    }
}

/// Lower bounds (or exact values) of the symmetric and non-symmetric masses.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleEvidence {
    pub cs: Probability,
    pub cn: Probability,
}

impl DipoleEvidence {
    pub fn new(cs: Probability, cn: Probability) -> Result<Self> {
        if cs.value() + cn.value() > 1.0 + 1e-12 {
            return Err(Error::InvalidObservation(format!(
                "C^S + C^N must not exceed 1 (got {} + {})",
                cs.value(),
                cn.value()
            )));
        }
        Ok(DipoleEvidence { cs, cn })
    }

    /// `C^S + C^N`, the smoothed value these masses decompose.
    pub fn total(&self) -> Probability {
        Probability::saturating(self.cs.value() + self.cn.value())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    First,
    Second,
    Dipole,
    Best,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::First => "first",
            Method::Second => "second",
            Method::Dipole => "dipole",
            Method::Best => "best",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "first" => Ok(Method::First),
            "second" => Ok(Method::Second),
            "dipole" => Ok(Method::Dipole),
            "best" => Ok(Method::Best),
            other => Err(format!("unknown method {other:?} (expected first, second, dipole or best)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub radius: f64,
    pub method: Method,
    pub abstained: bool,
    /// Total failure probability the certificate was computed under.
    pub eta: f64,
}

impl Certificate {
    pub fn abstain(method: Method, eta: f64) -> Self {
        Certificate { radius: 0.0, method, abstained: true, eta }
    }

    /// A certificate from a solved radius; a zero radius counts as abstention.
    pub fn from_radius(radius: f64, method: Method, eta: f64) -> Self {
        if radius > 0.0 {
            Certificate { radius, method, abstained: false, eta }
        } else {
            Certificate::abstain(method, eta)
        }
    }
}

/// The largest gradient norm a smoothed classifier can have at value `p`:
/// `σ⁻¹Φ′(Φ⁻¹(p))`, attained by a halfspace.
pub fn max_gradient_norm(p: Probability, params: SmoothingParams) -> f64 {
    std_pdf(std_quantile(p)) / params.sigma
}

/// `σΦ⁻¹(p)` for `p > 1/2`, otherwise zero.
pub fn first_order_radius(p: Probability, params: SmoothingParams) -> f64 {
    if p.value() <= 0.5 {
        return 0.0;
    }
    (params.sigma * std_quantile(p)).min(params.max_radius())
}

/// `Φ(Φ⁻¹(p) - ρ/σ)`.
pub fn first_order_lower_bound(p: Probability, params: SmoothingParams, rho: f64) -> Probability {
    if rho == 0.0 {
        return p;
    }
    Probability::saturating(cdf(std_quantile(p) - rho / params.sigma))
}

/// Solves `Φ′(Φ⁻¹(a′)) - Φ′(Φ⁻¹(a′ + p)) = -σ‖∇p‖` for `a′ ∈ [0, (1-p)/2]`.
///
/// Gradients above the physical maximum are treated as the maximum, which
/// gives `a′ = 0`. The left side is increasing in `a′`; the lower end of the
/// final bisection bracket is returned, which can only loosen the bound.
pub fn solve_a_prime(p: Probability, grad_norm: f64, params: SmoothingParams) -> Probability {
    let pv = p.value();
    if pv <= 0.0 || pv >= 1.0 {
        return Probability::ZERO;
    }
    let half_gap = 0.5 * p.complement();
    let target = params.sigma * grad_norm.max(0.0);
    if target <= 0.0 {
        return Probability::saturating(half_gap);
    }
    if target >= std_pdf(std_quantile(p)) {
        return Probability::ZERO;
    }
    let (lo, _) = bisect_increasing(|a| a_prime_residual(p, a, target), 0.0, half_gap, 0.0, 2000);
    Probability::saturating(lo)
}

/// Left side of the anchor equation plus `σ‖∇p‖`.
pub fn a_prime_residual(p: Probability, a: f64, sigma_grad: f64) -> f64 {
    let upper = Probability::from_complement((p.complement() - a).max(0.0)).unwrap_or(Probability::ONE);
    std_pdf(std_quantile(Probability::saturating(a))) - std_pdf(std_quantile(upper)) + sigma_grad
}

fn second_order_bound_at(p: Probability, a: Probability, params: SmoothingParams, rho: f64) -> f64 {
    let shift = rho / params.sigma;
    let upper = Probability::from_complement((p.complement() - a.value()).max(0.0)).unwrap_or(Probability::ONE);
    cdf(std_quantile(upper) - shift) - cdf(std_quantile(a) - shift)
}

/// Tight lower bound on the smoothed value at distance `rho`, given the value
/// and gradient norm at the centre.
pub fn second_order_lower_bound(ev: SecondOrderEvidence, params: SmoothingParams, rho: f64) -> Probability {
    if rho == 0.0 {
        return ev.p;
    }
    let a = solve_a_prime(ev.p, ev.grad_norm, params);
    Probability::saturating(second_order_bound_at(ev.p, a, params, rho))
}

/// Largest `ρ` at which [`second_order_lower_bound`] stays at or above 1/2.
pub fn second_order_radius(ev: SecondOrderEvidence, params: SmoothingParams) -> f64 {
    if ev.p.value() <= 0.5 {
        return 0.0;
    }
    let a = solve_a_prime(ev.p, ev.grad_norm, params);
    solve_radius(params, |rho| second_order_bound_at(ev.p, a, params, rho) >= 0.5)
}

fn dipole_bound_raw(ev: DipoleEvidence, params: SmoothingParams, rho: f64) -> f64 {
    let shift = rho / params.sigma;
    let half_rest = 0.5 * ev.cs.complement();
    let outer = Probability::from_complement(half_rest).unwrap_or(Probability::ONE);
    let inner = Probability::saturating(half_rest);
    cdf(std_quantile(ev.cn) - shift) + cdf(std_quantile(outer) - shift) - cdf(std_quantile(inner) - shift)
}

/// Lower bound on the smoothed value at distance `rho` from the dipole masses.
pub fn dipole_lower_bound(ev: DipoleEvidence, params: SmoothingParams, rho: f64) -> Probability {
    if rho == 0.0 {
        return ev.total();
    }
    Probability::saturating(dipole_bound_raw(ev, params, rho))
}

/// Largest `ρ` at which [`dipole_lower_bound`] stays at or above 1/2.
pub fn dipole_radius(ev: DipoleEvidence, params: SmoothingParams) -> f64 {
    if ev.cs.value() + ev.cn.value() <= 0.5 {
        return 0.0;
    }
    solve_radius(params, |rho| dipole_bound_raw(ev, params, rho) >= 0.5)
}

/// Upper bound on the smoothed value at distance `rho`, from the lower bound
/// of the complementary classifier `1 - f`.
pub fn upper_bound_value(p: Probability, grad_norm: f64, params: SmoothingParams, rho: f64) -> Probability {
    let complement = SecondOrderEvidence::new(p.flip(), grad_norm);
    second_order_lower_bound(complement, params, rho).flip()
}

fn solve_radius<P: FnMut(f64) -> bool>(params: SmoothingParams, holds: P) -> f64 {
    last_true_by_doubling(holds, params.sigma, params.max_radius(), RADIUS_TOL_SIGMAS * params.sigma)
}

/// An inclusive, evenly spaced sweep with `steps` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Grid {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        let grid = Grid { start, end, steps };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite bounds [{}, {}]", self.start, self.end)));
        }
        if self.steps < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 steps, got {}", self.steps)));
        }
        if self.start >= self.end {
            return Err(Error::InvalidGrid(format!("empty or inverted range [{}, {}]", self.start, self.end)));
        }
        Ok(())
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let last = (self.steps - 1) as f64;
        (0..self.steps).map(move |i| {
            if i + 1 == self.steps {
                self.end
            } else {
                self.start + (self.end - self.start) * i as f64 / last
            }
        })
    }
}

/// Gradient norm for one radius-vs-`p` series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum GradientSpec {
    /// A fixed norm, in units of 1/length.
    Absolute(f64),
    /// A fraction of the maximum norm possible at each `p`.
    FractionOfMax(f64),
}

impl GradientSpec {
    fn resolve(&self, p: Probability, params: SmoothingParams) -> f64 {
        match *self {
            GradientSpec::Absolute(g) => g,
            GradientSpec::FractionOfMax(f) => f * max_gradient_norm(p, params),
        }
    }

    fn column_name(&self) -> String {
        match self {
            GradientSpec::Absolute(g) => format!("radius_grad_{g}"),
            GradientSpec::FractionOfMax(f) => format!("radius_frac_{f}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CurveRequest {
    /// Second-order bound against distance at fixed evidence.
    BoundVsDistance { p: Probability, grad_norm: f64, params: SmoothingParams, rho: Grid },
    /// Second-order radius against `p`, one column per gradient spec.
    RadiusVsP { p: Grid, grads: Vec<GradientSpec>, params: SmoothingParams },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Evaluates a bound-vs-distance or radius-vs-`p` series.
///
/// The last column is always the first-order counterpart.
pub fn certificate_curve(request: &CurveRequest) -> Result<CurveTable> {
    match request {
        CurveRequest::BoundVsDistance { p, grad_norm, params, rho } => {
            rho.validate()?;
            if rho.start < 0.0 {
                return Err(Error::InvalidGrid(format!("distances must be non-negative, got {}", rho.start)));
            }
            let ev = SecondOrderEvidence::new(*p, *grad_norm);
            let a = solve_a_prime(*p, *grad_norm, *params);
            let rows = rho
                .points()
                .map(|r| {
                    let bound = if r == 0.0 { p.value() } else { second_order_bound_at(ev.p, a, *params, r).clamp(0.0, 1.0) };
                    vec![r, bound, first_order_lower_bound(*p, *params, r).value()]
                })
                .collect();
            Ok(CurveTable {
                columns: vec!["rho".into(), "bound".into(), "first_order_bound".into()],
                rows,
            })
        }
        CurveRequest::RadiusVsP { p, grads, params } => {
            p.validate()?;
            if p.start < 0.0 || p.end > 1.0 {
                return Err(Error::InvalidGrid(format!("p range [{}, {}] outside [0, 1]", p.start, p.end)));
            }
            if grads.is_empty() {
                return Err(Error::InvalidGrid("no gradient series requested".into()));
            }
            let mut columns = vec!["p".to_string()];
            columns.extend(grads.iter().map(GradientSpec::column_name));
            columns.push("radius_first".into());
            let rows = p
                .points()
                .map(|pv| {
                    let prob = Probability::saturating(pv);
                    let mut row = Vec::with_capacity(grads.len() + 2);
                    row.push(pv);
                    for g in grads {
                        let ev = SecondOrderEvidence::new(prob, g.resolve(prob, *params));
                        row.push(second_order_radius(ev, *params));
                    }
                    row.push(first_order_radius(prob, *params));
                    row
                })
                .collect();
            Ok(CurveTable { columns, rows })
        }
    }
}
