//! Bracketing root finders for monotone scalar functions.

/// Finds the sign change of an increasing function on `[lo, hi]`.
///
/// Returns the final bracket `(lo, hi)` with `f(lo) < 0 <= f(hi)` preserved
/// (as far as it held initially). Stops once the bracket is narrower than
/// `tol` or can no longer be split in floating point.
pub fn bisect_increasing<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo, hi)
}

/// Largest `x` in `[0, cap]` with `pred(x)` true, for a predicate that is
/// true on an initial segment.
///
/// The upper end of the bracket is found by doubling from `start`. The
/// result is the lower end of the final bracket, so `pred` holds there
/// whenever it held at zero.
pub fn last_true_by_doubling<P>(mut pred: P, start: f64, cap: f64, tol: f64) -> f64
where
    P: FnMut(f64) -> bool,
{
    let mut lo = 0.0;
    let mut hi = start.min(cap);
    while pred(hi) {
        if hi >= cap {
            return cap;
        }
        lo = hi;
        hi = (2.0 * hi).min(cap);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt_two() {
        let (lo, hi) = bisect_increasing(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 200);
        assert!(lo * lo < 2.0 && hi * hi >= 2.0);
        assert!((lo - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn doubling_respects_cap() {
        assert_eq!(last_true_by_doubling(|_| true, 1.0, 40.0, 1e-9), 40.0);
        let x = last_true_by_doubling(|x| x <= 3.3, 1.0, 40.0, 1e-12);
        assert!(x <= 3.3 && 3.3 - x < 1e-11);
        assert_eq!(last_true_by_doubling(|x| x <= 0.0, 1.0, 40.0, 1e-12), 0.0);
    }
}
