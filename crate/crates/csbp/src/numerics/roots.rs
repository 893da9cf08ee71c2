//! Bracketed root finding for mechanism-level quantities (the largest root of
//! a convex branching mechanism, inverse cumulants).

use crate::error::{Error, Result};

/// Geometric bracket growth stops here; a sign change not found below this
/// bound is treated by callers as "no finite root".
pub const EXPANSION_BOUND: f64 = 1e18;

/// Relative bisection tolerance. The consumers (criticality classification,
/// quasi-stationary transforms) compare at 1e-8; two extra decades keep the
/// root error invisible.
pub const REL_TOL: f64 = 1e-12;

/// Expands the upper end of [lo, hi] geometrically (factor 2) until
/// f(lo) and f(hi) have opposite signs. Returns None if no sign change is
/// found below `EXPANSION_BOUND`.
pub fn expand_bracket(f: &dyn Fn(f64) -> f64, lo: f64, hi0: f64) -> Option<(f64, f64)> {
    let flo = f(lo);
    let mut hi = hi0;
    let mut lo = lo;
    while hi <= EXPANSION_BOUND {
        let fhi = f(hi);
        if flo == 0.0 {
            return Some((lo, lo));
        }
        if fhi == 0.0 {
            return Some((hi, hi));
        }
        if (flo < 0.0) != (fhi < 0.0) {
            return Some((lo, hi));
        }
        lo = hi;
        hi *= 2.0;
    }
    None
}

/// Bisection on [lo, hi]; requires a sign change. Converges to relative
/// tolerance `REL_TOL` (absolute 1e-300 floor for roots near zero).
pub fn bisect(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo, hi);
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if (flo < 0.0) == (fhi < 0.0) {
        return Err(Error::domain(format!("no sign change on [{lo}, {hi}]")));
    }
    let neg_low = flo < 0.0;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo) <= REL_TOL * mid.abs().max(1e-300) {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm < 0.0) == neg_low {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::numerics("bisection exceeded iteration cap".to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_root() {
        // q^2 - q: positive root at 1, function negative on (0, 1).
        let f = |q: f64| q * q - q;
        let (lo, hi) = expand_bracket(&f, 1e-6, 1e-3).expect("bracket");
        let r = bisect(&f, lo, hi).unwrap();
        assert!((r - 1.0).abs() < 1e-10, "got {r}");
    }

    #[test]
    fn bracket_fails_when_no_root() {
        // -sqrt(q) is negative everywhere.
        assert!(expand_bracket(&|q: f64| -q.sqrt(), 1e-6, 1.0).is_none());
    }

    #[test]
    fn large_root_found_by_expansion() {
        let f = |q: f64| q - 3.0e7;
        let (lo, hi) = expand_bracket(&f, 1.0, 2.0).expect("bracket");
        let r = bisect(&f, lo, hi).unwrap();
        assert!((r - 3.0e7).abs() / 3.0e7 < 1e-10);
    }
}
