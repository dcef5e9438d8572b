//! Standard normal primitives: CDF, density and quantile.
//!
//! Every certificate formula is a composition of these three functions, so
//! they are implemented to near full double precision. The quantile is
//! evaluated on whichever tail is smaller, which is why [`Probability`]
//! carries its complement alongside its value: `1 - Φ(8)` is not
//! representable as `1.0 - x` for any double `x` close to one.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::Error;

/// `1 / sqrt(2π)`
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A probability together with its complement.
///
/// Both halves are kept so that values extremely close to one keep their
/// tail precision. Constructing from a single value sets the complement to
/// `1 - value`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probability {
    value: f64,
    complement: f64,
}

impl Probability {
    pub const ZERO: Probability = Probability { value: 0.0, complement: 1.0 };
    pub const HALF: Probability = Probability { value: 0.5, complement: 0.5 };
    pub const ONE: Probability = Probability { value: 1.0, complement: 0.0 };

    pub fn new(value: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidProbability(value));
        }
        Ok(Probability { value, complement: 1.0 - value })
    }

    /// Builds `1 - complement` without losing the precision of `complement`.
    pub fn from_complement(complement: f64) -> Result<Self, Error> {
        if !(0.0..=1.0).contains(&complement) {
            return Err(Error::InvalidProbability(1.0 - complement));
        }
        Ok(Probability { value: 1.0 - complement, complement })
    }

    /// Clamps into `[0, 1]`; NaN maps to zero.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() || value <= 0.0 {
            Self::ZERO
        } else if value >= 1.0 {
            Self::ONE
        } else {
            Probability { value, complement: 1.0 - value }
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.value
    }

    #[inline]
    pub fn complement(self) -> f64 {
        self.complement
    }

    /// `1 - p`, exchanging the stored halves.
    pub fn flip(self) -> Self {
        Probability { value: self.complement, complement: self.value }
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.value
    }
}

/// Standard normal CDF Φ(z). Total on the extended reals.
pub fn std_cdf(z: f64) -> Probability {
    if z.is_nan() {
        return Probability { value: f64::NAN, complement: f64::NAN };
    }
    let lower = 0.5 * erfc(-z * FRAC_1_SQRT_2);
    let upper = 0.5 * erfc(z * FRAC_1_SQRT_2);
    Probability { value: lower, complement: upper }
}

/// Shorthand for `std_cdf(z).value()`.
#[inline]
pub fn cdf(z: f64) -> f64 {
    if z < 0.0 {
        0.5 * erfc(-z * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * erfc(z * FRAC_1_SQRT_2)
    }
}

/// Standard normal density Φ′(z).
#[inline]
pub fn std_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Standard normal quantile Φ⁻¹(p), with Φ⁻¹(0) = -∞ and Φ⁻¹(1) = +∞.
pub fn std_quantile(p: Probability) -> f64 {
    if p.value <= p.complement {
        lower_tail_quantile(p.value)
    } else {
        -lower_tail_quantile(p.complement)
    }
}

/// Φ⁻¹ of a plain double. Loses tail precision above one half compared to
/// [`std_quantile`] on a [`Probability`] built from its complement.
#[inline]
pub fn quantile(p: f64) -> f64 {
    std_quantile(Probability::saturating(p))
}

// Rational approximation of the lower half (p <= 0.5) followed by one
// Halley step against erfc, which takes the ~1e-9 relative error of the
// rational form down to round-off.
fn lower_tail_quantile(p: f64) -> f64 {
    if p.is_nan() {
        return f64::NAN;
    }
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let x = initial_guess(p);
    if !x.is_finite() {
        return x;
    }
    // Residual on the lower tail only, so small p keeps relative accuracy.
    let e = 0.5 * erfc(-x * FRAC_1_SQRT_2) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

const A: [f64; 6] = [
    -3.969_683_028_665_376e1,
    2.209_460_984_245_205e2,
    -2.759_285_104_469_687e2,
    1.383_577_518_672_69e2,
    -3.066_479_806_614_716e1,
    2.506_628_277_459_239,
];
const B: [f64; 5] = [
    -5.447_609_879_822_406e1,
    1.615_858_368_580_409e2,
    -1.556_989_798_598_866e2,
    6.680_131_188_771_972e1,
    -1.328_068_155_288_572e1,
];
const C: [f64; 6] = [
    -7.784_894_002_430_293e-3,
    -3.223_964_580_411_365e-1,
    -2.400_758_277_161_838,
    -2.549_732_539_343_734,
    4.374_664_141_464_968,
    2.938_163_982_698_783,
];
const D: [f64; 4] = [
    7.784_695_709_041_462e-3,
    3.224_671_290_700_398e-1,
    2.445_134_137_142_996,
    3.754_408_661_907_416,
];
const P_LOW: f64 = 0.02425;

fn initial_guess(p: f64) -> f64 {
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Φ by midpoint-free composite Simpson on [0, z]; independent of erfc.
    fn simpson_cdf(z: f64) -> f64 {
        let n = 20_000;
        let h = z / n as f64;
        let mut acc = std_pdf(0.0) + std_pdf(z);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * std_pdf(i as f64 * h);
        }
        0.5 + acc * h / 3.0
    }

    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if simpson_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(std_cdf(0.0).value(), 0.5);
        assert_eq!(std_cdf(f64::INFINITY).value(), 1.0);
        assert_eq!(std_cdf(f64::NEG_INFINITY).value(), 0.0);
        let oracle = simpson_cdf(1.0);
        assert!((oracle - 0.841_344_746_068_543).abs() < 1e-12);
        assert!((std_cdf(1.0).value() - oracle).abs() < 1e-14);
    }

    #[test]
    fn cdf_reflection() {
        let mut z = -10.0;
        while z <= 10.0 {
            let a = std_cdf(-z).value();
            let b = 1.0 - std_cdf(z).value();
            assert!((a - b).abs() <= 1e-15, "z={z}");
            z += 0.01;
        }
    }

    #[test]
    fn pdf_examples() {
        assert!((std_pdf(0.0) - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-16);
        assert!((std_pdf(0.841_621_2) - 0.279_961_9).abs() < 1e-7);
        assert_eq!(std_pdf(1.3), std_pdf(-1.3));
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_quantile(Probability::HALF), 0.0);
        let oracle = bisect_quantile(0.8);
        assert!((oracle - 0.841_621_2).abs() < 1e-7);
        assert!((quantile(0.8) - oracle).abs() < 1e-12);
        assert!((quantile(0.841_344_746) - 1.0).abs() < 1e-9);
        assert_eq!(quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(quantile(1.0), f64::INFINITY);
    }

    #[test]
    fn quantile_inverts_cdf_on_probability_grid() {
        let mut p = 1e-300_f64;
        while p < 0.5 {
            let x = quantile(p);
            let back = 0.5 * erfc(-x * FRAC_1_SQRT_2);
            assert!((back - p).abs() <= 1e-9 * p.max(1e-300) + 1e-300, "p={p:e}");
            p *= 1.7;
        }
        for q in [1e-16, 1e-12, 1e-6, 0.01, 0.3] {
            let p = Probability::from_complement(q).unwrap();
            assert!((std_cdf(std_quantile(p)).value() - p.value()).abs() <= 1e-9);
        }
    }

    #[test]
    fn round_trip_and_antisymmetry() {
        for i in 0..=16_000 {
            let z = -8.0 + i as f64 * 1e-3;
            let back = std_quantile(std_cdf(z));
            assert!((back - z).abs() <= 1e-9, "z={z} back={back}");
        }
        for i in 1..1000 {
            let p = i as f64 / 1000.0;
            let a = std_quantile(Probability::new(p).unwrap());
            let b = std_quantile(Probability::new(1.0 - p).unwrap());
            assert!((a + b).abs() <= 1e-12, "p={p}");
        }
    }

    #[test]
    fn derivative_matches_density() {
        let h = 1e-5;
        for i in 0..=1200 {
            let z = -6.0 + i as f64 * 0.01;
            let fd = (std_cdf(z + h).value() - std_cdf(z - h).value()) / (2.0 * h);
            assert!((fd - std_pdf(z)).abs() <= 1e-6, "z={z}");
        }
    }

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(1.5).is_err());
        assert!(Probability::new(-0.1).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert_eq!(Probability::saturating(2.0), Probability::ONE);
        assert_eq!(Probability::new(0.3).unwrap().flip().value(), 0.7);
    }
}
