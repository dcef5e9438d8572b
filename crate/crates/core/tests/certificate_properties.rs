//! Grid checks of the structural properties of the certificate family.

use smoothcert::certificates::{
    dipole_lower_bound, dipole_radius, first_order_lower_bound, first_order_radius, max_gradient_norm,
    second_order_lower_bound, second_order_radius, upper_bound_value, DipoleEvidence, SecondOrderEvidence,
    SmoothingParams,
};
use smoothcert::normal::Probability;

fn prob(v: f64) -> Probability {
    Probability::new(v).unwrap()
}

fn sigmas() -> [SmoothingParams; 2] {
    [SmoothingParams::new(1.0).unwrap(), SmoothingParams::new(0.25).unwrap()]
}

fn second(p: f64, g: f64, params: SmoothingParams) -> f64 {
    second_order_radius(SecondOrderEvidence::new(prob(p), g), params)
}

fn dipole(cs: f64, cn: f64, params: SmoothingParams) -> f64 {
    dipole_radius(DipoleEvidence::new(prob(cs), prob(cn)).unwrap(), params)
}

#[test]
fn second_order_dominates_first_order_on_grid() {
    for params in sigmas() {
        for i in 0..50 {
            let p = 0.5 + 0.49 * (i + 1) as f64 / 50.0;
            let first = first_order_radius(prob(p), params);
            let max = max_gradient_norm(prob(p), params);
            for j in 0..50 {
                let g = max * j as f64 / 49.0;
                let r = second(p, g, params);
                assert!(r >= first - 1e-6, "p={p} g={g} second={r} first={first}");
            }
        }
    }
}

#[test]
fn second_order_radius_non_increasing_in_gradient() {
    for params in sigmas() {
        for i in 0..25 {
            let p = 0.52 + 0.47 * i as f64 / 24.0;
            let max = max_gradient_norm(prob(p), params);
            let mut prev = f64::INFINITY;
            for j in 0..=60 {
                let r = second(p, max * j as f64 / 60.0, params);
                assert!(r <= prev + 1e-12, "p={p} step={j}");
                prev = r;
            }
        }
    }
}

#[test]
fn radii_non_decreasing_in_mass() {
    let params = SmoothingParams::new(1.0).unwrap();
    for &g in &[0.0_f64, 0.05, 0.1, 0.2] {
        let mut prev = 0.0;
        for i in 0..=90 {
            let p = 0.505 + 0.49 * i as f64 / 90.0;
            // Holding the gradient fixed is only meaningful where it is feasible.
            let g = g.min(max_gradient_norm(prob(p), params));
            let r = second(p, g, params);
            if g < max_gradient_norm(prob(p), params) {
                assert!(r + 1e-9 >= prev, "g={g} p={p}");
            }
            prev = r;
        }
    }
    for i in 0..=40 {
        let cs = i as f64 / 40.0;
        let mut prev = 0.0;
        for j in 0..=40 {
            let cn = (1.0 - cs) * j as f64 / 40.0;
            let r = dipole(cs, cn, params);
            assert!(r + 1e-9 >= prev, "cs={cs} cn={cn}");
            prev = r;
        }
    }
    for j in 0..=40 {
        let cn = 0.3 * j as f64 / 40.0;
        let mut prev = 0.0;
        for i in 0..=40 {
            let cs = (1.0 - cn) * i as f64 / 40.0;
            let r = dipole(cs, cn, params);
            assert!(r + 1e-9 >= prev, "cs={cs} cn={cn}");
            prev = r;
        }
    }
}

#[test]
fn dipole_dominates_first_order_without_overlap() {
    for params in sigmas() {
        for i in 0..=60 {
            let cs = i as f64 / 60.0;
            for j in 0..=60 {
                let cn = 0.5 * (1.0 - cs) * j as f64 / 60.0;
                if cs + cn <= 0.5 {
                    continue;
                }
                let r = dipole(cs, cn, params);
                let first = first_order_radius(prob(cs + cn), params);
                assert!(r >= first - 1e-6, "cs={cs} cn={cn} dipole={r} first={first}");
            }
        }
    }
}

#[test]
fn zero_gradient_sits_below_half_mass_first_order() {
    for params in sigmas() {
        for i in 1..100 {
            let p = 0.5 + 0.5 * i as f64 / 100.0;
            let r = second(p, 0.0, params);
            let half_mass = first_order_radius(prob((1.0 + p) / 2.0), params);
            assert!(r < half_mass, "p={p} r={r} half={half_mass}");
        }
    }
}

fn assert_strictly_decreasing(values: &[f64], what: &str) {
    for (i, w) in values.windows(2).enumerate() {
        if w[0] <= 1e-280 {
            break;
        }
        assert!(w[1] < w[0], "{what}: step {i} went {} -> {}", w[0], w[1]);
    }
}

#[test]
fn lower_bounds_strictly_decrease_in_distance() {
    let params = SmoothingParams::new(1.0).unwrap();
    let rhos: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
    for &p in &[0.55, 0.8, 0.99] {
        let first: Vec<f64> = rhos.iter().map(|&r| first_order_lower_bound(prob(p), params, r).value()).collect();
        assert_strictly_decreasing(&first, "first");
        let max = max_gradient_norm(prob(p), params);
        for frac in [0.0, 0.3, 0.7, 1.0] {
            let ev = SecondOrderEvidence::new(prob(p), frac * max);
            let second: Vec<f64> = rhos.iter().map(|&r| second_order_lower_bound(ev, params, r).value()).collect();
            assert_strictly_decreasing(&second, "second");
        }
    }
    for &(cs, cn) in &[(0.8, 0.0), (0.0, 0.8), (0.5, 0.2), (0.3, 0.6)] {
        let ev = DipoleEvidence::new(prob(cs), prob(cn)).unwrap();
        let values: Vec<f64> = rhos.iter().map(|&r| dipole_lower_bound(ev, params, r).value()).collect();
        assert_strictly_decreasing(&values, "dipole");
    }
}

#[test]
fn upper_bound_brackets_the_lower_bound() {
    let params = SmoothingParams::new(1.0).unwrap();
    for &p in &[0.6, 0.8, 0.95] {
        let max = max_gradient_norm(prob(p), params);
        for frac in [0.0, 0.5, 1.0] {
            let g = frac * max;
            let mut prev = p;
            for i in 0..=200 {
                let rho = i as f64 * 0.02;
                let lo = second_order_lower_bound(SecondOrderEvidence::new(prob(p), g), params, rho).value();
                let hi = upper_bound_value(prob(p), g, params, rho).value();
                assert!(lo <= hi + 1e-12, "p={p} g={g} rho={rho}");
                assert!(hi + 1e-12 >= prev, "upper bound must not decrease");
                prev = hi;
            }
        }
    }
}
