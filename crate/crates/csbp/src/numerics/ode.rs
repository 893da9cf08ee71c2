//! Adaptive Runge-Kutta integration for the scalar autonomous equations the
//! cumulant semigroup solves.
//!
//! Dormand-Prince 5(4) pair with standard PI-free step control. The cumulant
//! equation dv/dt = -Psi(v) is smooth away from the boundary points 0 and
//! infinity, and callers keep initial data strictly inside (0, infinity), so a
//! non-stiff embedded pair is adequate.

use crate::error::{Error, Result};

/// Relative tolerance for cumulant integration. One decade below the 1e-8
/// closed-form agreement the semigroup contract demands, so integration error
/// never dominates a comparison.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Absolute floor; the cumulant can legitimately approach 0 (large t,
/// subcritical), where relative control alone would stall.
pub const DEFAULT_ABS_TOL: f64 = 1e-14;

const MAX_STEPS: usize = 2_000_000;

/// Integrates dv/dt = f(v) from v0 over a duration `t` (t >= 0) and returns
/// v(t). `f` must be finite on the orbit.
pub fn integrate_autonomous(f: &dyn Fn(f64) -> f64, v0: f64, t: f64) -> Result<f64> {
    integrate_autonomous_tol(f, v0, t, DEFAULT_REL_TOL, DEFAULT_ABS_TOL)
}

pub fn integrate_autonomous_tol(
    f: &dyn Fn(f64) -> f64,
    v0: f64,
    t: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<f64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::domain(format!("integration span must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(v0);
    }

    // Dormand-Prince coefficients (the classical pair behind RK45 solvers).
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    // 5th order solution weights.
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // Embedded 4th order weights.
    const E1: f64 = 5179.0 / 57600.0;
    const E3: f64 = 7571.0 / 16695.0;
    const E4: f64 = 393.0 / 640.0;
    const E5: f64 = -92097.0 / 339200.0;
    const E6: f64 = 187.0 / 2100.0;
    const E7: f64 = 1.0 / 40.0;

    let mut v = v0;
    let mut s = 0.0_f64;
    let k1_init = f(v);
    if !k1_init.is_finite() {
        return Err(Error::numerics(format!("derivative not finite at initial value {v0}")));
    }
    // Initial step: conservative scale from the derivative magnitude.
    let mut h = (t / 100.0).min(0.1 * (v0.abs() + 1.0) / (k1_init.abs() + 1e-30)).max(t * 1e-12);
    let mut k1 = k1_init;

    for _ in 0..MAX_STEPS {
        if s >= t {
            return Ok(v);
        }
        if h > t - s {
            h = t - s;
        }

        let k2 = f(v + h * A21 * k1);
        let k3 = f(v + h * (A31 * k1 + A32 * k2));
        let k4 = f(v + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(v + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = f(v + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let v5 = v + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(v5);
        let v4 = v + h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);

        if !v5.is_finite() || !k7.is_finite() {
            // Step left the domain where f is finite; retry smaller.
            h *= 0.25;
            if h < t * 1e-15 {
                return Err(Error::numerics("step size underflow while avoiding a singularity".to_string()));
            }
            continue;
        }

        let scale = abs_tol + rel_tol * v.abs().max(v5.abs());
        let err = (v5 - v4).abs() / scale;
        if err <= 1.0 {
            s += h;
            v = v5;
            k1 = k7; // FSAL
            // Return before the controller rescales h: the final step is
            // clamped to the remaining span, which can be ulp-sized and would
            // trip the underflow guard below after a completed integration.
            if s >= t {
                return Ok(v);
            }
        }
        let factor = if err > 0.0 { 0.9 * err.powf(-0.2) } else { 5.0 };
        h *= factor.clamp(0.2, 5.0);
        if h < t * 1e-15 {
            return Err(Error::numerics("step size underflow in adaptive integration".to_string()));
        }
    }
    Err(Error::numerics(format!("integration did not converge within {MAX_STEPS} steps")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        // dv/dt = -v, v(0) = 1 => v(t) = e^{-t}.
        let v = integrate_autonomous(&|v| -v, 1.0, 2.5).unwrap();
        assert!((v - (-2.5_f64).exp()).abs() < 1e-10, "got {v}");
    }

    #[test]
    fn logistic_matches_closed_form() {
        // dv/dt = v - v^2 from v0 = 2 => v(t) = 2 e^t / (2 e^t - 1)... solved:
        // v(t) = v0 e^t / (1 + v0 (e^t - 1)).
        let v0 = 2.0_f64;
        let t = 1.7_f64;
        let expect = v0 * t.exp() / (1.0 + v0 * (t.exp() - 1.0));
        let v = integrate_autonomous(&|v| v - v * v, v0, t).unwrap();
        assert!((v - expect).abs() < 1e-10, "got {v}, expected {expect}");
    }

    #[test]
    fn zero_span_is_identity() {
        let v = integrate_autonomous(&|v| -v * v, 3.0, 0.0).unwrap();
        assert_eq!(v, 3.0);
    }

    #[test]
    fn rejects_negative_span() {
        assert!(integrate_autonomous(&|v| -v, 1.0, -1.0).is_err());
    }
}
