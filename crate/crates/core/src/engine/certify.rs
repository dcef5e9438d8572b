use serde::{Deserialize, Serialize};

use super::noise::Domain;
use super::sampling::{sample_class_counts, sample_counts, sample_dipole_pairs, sample_gradient_pairs};
use super::SamplingPlan;
use crate::certificates::{
    dipole_radius, first_order_radius, second_order_radius, Certificate, DipoleEvidence, Method,
    SecondOrderEvidence, SmoothingParams,
};
use crate::classifiers::{AnalyticSmoothing, BaseClassifier};
use crate::error::{Error, Result};
use crate::estimation::{
    binomial_lower_bound, dipole_fraction_bounds, gradient_deviation_t, gradient_norm_from_moment,
    ConfidenceBudget,
};
use crate::normal::Probability;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientRecord {
    pub v_hat: f64,
    pub t: f64,
    pub grad_ub: f64,
    pub n_pairs: u64,
    pub dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleRecord {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
    pub cs_lb: f64,
    pub cn_lb: f64,
}

/// The statistics a certificate was computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    /// Top class chosen in stage 1.
    pub class: usize,
    pub selection_counts: Vec<u64>,
    /// Hits of `class` among the stage-2 evaluations (first and second order).
    pub successes: Option<u64>,
    pub trials: u64,
    /// Lower confidence bound on the smoothed value of `class`. For dipole
    /// evidence this is `cs_lb + cn_lb`.
    pub p_lb: f64,
    pub gradient: Option<GradientRecord>,
    pub dipole: Option<DipoleRecord>,
    /// First-order radius from the same evidence.
    pub radius_first: f64,
    pub budget: ConfidenceBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOutcome {
    pub certificate: Certificate,
    pub evidence: Evidence,
}

/// Majority label of `counts`, lowest index on ties.
pub fn select_class(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Two-stage certification of `x`.
///
/// Stage 1 picks the top class from `plan.n0` samples. Stage 2 spends
/// `plan.n` classifier evaluations on the method's statistics:
///
/// - `first`: all of `eta` on a Clopper–Pearson bound of `p`;
/// - `second`: `eta/2` on `p` from all samples, `eta/2` on the gradient
///   norm from `n/2` disjoint pairs of the same samples;
/// - `dipole` and `best`: `eta/2` each on `C^S` and `C^N` from `n/2`
///   antithetic pairs. `best` reports the larger of the dipole radius and
///   the first-order radius at `p_lb = cs_lb + cn_lb`.
///
/// The certificate abstains whenever the evidence gives `p_lb <= 1/2`.
pub fn certify<C: BaseClassifier + ?Sized>(
    classifier: &C,
    x: &[f64],
    plan: &SamplingPlan,
    eta: f64,
    method: Method,
) -> Result<CertifyOutcome> {
    plan.validate()?;
    let mut budget = ConfidenceBudget::new(eta)?;
    let params = plan.params;
    let selection_counts = sample_class_counts(classifier, x, plan, plan.n0, Domain::Selection)?;
    let class = select_class(&selection_counts);

    let mut evidence = Evidence {
        class,
        selection_counts,
        successes: None,
        trials: plan.n,
        p_lb: 0.0,
        gradient: None,
        dipole: None,
        radius_first: 0.0,
        budget: budget.clone(),
    };

    let certificate = match method {
        Method::First => {
            let alpha = budget.allocate("p", eta)?;
            let obs = sample_counts(classifier, x, plan, class)?;
            let p_lb = binomial_lower_bound(obs, alpha)?;
            evidence.successes = Some(obs.successes());
            evidence.p_lb = p_lb.value();
            evidence.radius_first = first_order_radius(p_lb, params);
            certificate_from(p_lb, evidence.radius_first, method, eta)
        }
        Method::Second => {
            if plan.n < 2 || plan.n % 2 != 0 {
                return Err(Error::InvalidPlan(format!("second-order certification needs an even n >= 2, got {}", plan.n)));
            }
            let alpha_p = budget.allocate("p", eta / 2.0)?;
            let alpha_g = budget.allocate("gradient", eta / 2.0)?;
            let (obs, est) = sample_gradient_pairs(classifier, x, plan, class)?;
            let p_lb = binomial_lower_bound(obs, alpha_p)?;
            let t = gradient_deviation_t(est.n_pairs, est.dim, params, alpha_g)?;
            let grad_ub = gradient_norm_from_moment(est.v_hat + t, params, p_lb);
            evidence.successes = Some(obs.successes());
            evidence.p_lb = p_lb.value();
            evidence.radius_first = first_order_radius(p_lb, params);
            evidence.gradient = Some(GradientRecord { v_hat: est.v_hat, t, grad_ub, n_pairs: est.n_pairs, dim: est.dim });
            let radius = second_order_radius(SecondOrderEvidence::new(p_lb, grad_ub), params);
            certificate_from(p_lb, radius, method, eta)
        }
        Method::Dipole | Method::Best => {
            if plan.n < 2 {
                return Err(Error::InvalidPlan("dipole certification needs n >= 2".into()));
            }
            budget.allocate("cs", eta / 2.0)?;
            budget.allocate("cn", eta / 2.0)?;
            let pairs = sample_dipole_pairs(classifier, x, plan, class)?;
            let ev = dipole_fraction_bounds(&pairs, eta)?;
            let p_lb = ev.total();
            evidence.p_lb = p_lb.value();
            evidence.trials = 2 * pairs.pairs();
            evidence.radius_first = first_order_radius(p_lb, params);
            evidence.dipole = Some(DipoleRecord {
                n11: pairs.n11,
                n10: pairs.n10,
                n01: pairs.n01,
                n00: pairs.n00,
                cs_lb: ev.cs.value(),
                cn_lb: ev.cn.value(),
            });
            let mut radius = dipole_radius(ev, params);
            if method == Method::Best {
                radius = radius.max(evidence.radius_first);
            }
            certificate_from(p_lb, radius, method, eta)
        }
    };
    evidence.budget = budget;
    Ok(CertifyOutcome { certificate, evidence })
}

fn certificate_from(p_lb: Probability, radius: f64, method: Method, eta: f64) -> Certificate {
    if p_lb.value() <= 0.5 {
        Certificate::abstain(method, eta)
    } else {
        Certificate::from_radius(radius, method, eta)
    }
}

/// Certificate from exact smoothed quantities of the class-1 indicator,
/// bypassing sampling. The reported `eta` is zero.
pub fn certify_exact<C: AnalyticSmoothing + ?Sized>(
    classifier: &C,
    x: &[f64],
    params: SmoothingParams,
    method: Method,
) -> Result<Certificate> {
    let radius = match method {
        Method::First => {
            let v = classifier.smoothed(x, params)?;
            first_order_radius(v.p, params)
        }
        Method::Second => {
            let v = classifier.smoothed(x, params)?;
            second_order_radius(SecondOrderEvidence::new(v.p, v.grad_norm).clamped(params), params)
        }
        Method::Dipole => dipole_radius(classifier.dipole_masses(x, params)?, params),
        Method::Best => {
            let ev: DipoleEvidence = classifier.dipole_masses(x, params)?;
            dipole_radius(ev, params).max(first_order_radius(ev.total(), params))
        }
    };
    Ok(Certificate::from_radius(radius, method, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certificates::max_gradient_norm;
    use crate::classifiers::{worst_case_slab, Constant, Halfspace};
    use crate::estimation::BinomialObservation;

    fn plan(n: u64, sigma: f64, seed: u64) -> SamplingPlan {
        SamplingPlan::new(100, n, SmoothingParams::new(sigma).unwrap(), seed)
    }

    #[test]
    fn selection_ties_go_low() {
        assert_eq!(select_class(&[3, 5, 5, 1]), 1);
        assert_eq!(select_class(&[0, 0]), 0);
    }

    #[test]
    fn constant_one_never_abstains() {
        let one = Constant { dim: 2, label: 1, classes: 2 };
        let p = plan(10_000, 0.5, 1);
        let params = p.params;
        let eta = 0.001;
        for method in [Method::First, Method::Second, Method::Dipole, Method::Best] {
            let out = certify(&one, &[0.0, 0.0], &p, eta, method).unwrap();
            assert!(!out.certificate.abstained, "{method}");
            assert_eq!(out.evidence.class, 1);
            let expected = match method {
                Method::First => first_order_radius(binomial_lower_bound(BinomialObservation::new(10_000, 10_000).unwrap(), eta).unwrap(), params),
                Method::Second => {
                    let p_lb = binomial_lower_bound(BinomialObservation::new(10_000, 10_000).unwrap(), eta / 2.0).unwrap();
                    let g = out.evidence.gradient.as_ref().unwrap().grad_ub;
                    second_order_radius(SecondOrderEvidence::new(p_lb, g), params)
                }
                Method::Dipole | Method::Best => {
                    let cs = binomial_lower_bound(BinomialObservation::new(5000, 5000).unwrap(), eta / 2.0).unwrap();
                    dipole_radius(DipoleEvidence::new(cs, Probability::ZERO).unwrap(), params)
                }
            };
            assert_eq!(out.certificate.radius, expected, "{method}");
        }
    }

    #[test]
    fn exact_mode_on_worst_case_slab() {
        let params = SmoothingParams::new(1.0).unwrap();
        let slab = worst_case_slab(Probability::new(0.8).unwrap(), 0.0, &[0.0, 0.0], &[1.0, 0.0], params).unwrap();
        let cert = certify_exact(&slab, &[0.0, 0.0], params, Method::Second).unwrap();
        assert!((cert.radius - 1.268).abs() < 2e-3);
        let h = Halfspace::new(vec![1.0], 1.0).unwrap();
        let first = certify_exact(&h, &[0.0], params, Method::First).unwrap().radius;
        let second = certify_exact(&h, &[0.0], params, Method::Second).unwrap().radius;
        assert!((first - 1.0).abs() < 1e-9 && (second - 1.0).abs() < 1e-9);
        let g = max_gradient_norm(Probability::new(0.5).unwrap(), params);
        assert!(g > 0.0);
    }

    #[test]
    fn halfspace_first_order_is_below_distance() {
        let h = Halfspace::new(vec![1.0, 0.0], 0.5).unwrap();
        let out = certify(&h, &[0.0, 0.0], &plan(100_000, 0.25, 11), 0.001, Method::First).unwrap();
        assert!(!out.certificate.abstained);
        assert!(out.certificate.radius <= 0.5);
        assert!(out.certificate.radius > 0.45);
    }

    #[test]
    fn best_is_max_of_first_and_dipole() {
        let h = Halfspace::new(vec![1.0, 0.0], 0.5).unwrap();
        let p = plan(20_000, 0.25, 4);
        let best = certify(&h, &[0.0, 0.0], &p, 0.01, Method::Best).unwrap();
        let dip = certify(&h, &[0.0, 0.0], &p, 0.01, Method::Dipole).unwrap();
        assert_eq!(best.evidence.dipole, dip.evidence.dipole);
        assert_eq!(best.certificate.radius, dip.certificate.radius.max(best.evidence.radius_first));
        assert!(best.certificate.radius >= best.evidence.radius_first);
    }

    #[test]
    fn far_side_point_abstains() {
        let h = Halfspace::new(vec![1.0], -1.0).unwrap();
        // x = 0 is on the class-0 side; class 0 is selected and certified.
        let out = certify(&h, &[0.0], &plan(10_000, 1.0, 2), 0.01, Method::First).unwrap();
        assert_eq!(out.evidence.class, 0);
        let h = Halfspace::new(vec![1.0], 0.0).unwrap();
        let out = certify(&h, &[0.0], &plan(10_000, 1.0, 2), 0.01, Method::Second).unwrap();
        assert!(out.certificate.abstained);
        assert_eq!(out.certificate.radius, 0.0);
    }
}
