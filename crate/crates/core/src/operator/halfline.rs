//! The regional operator on the half-line `ℝ₊` applied to `y^τ` and `−ln y`.
//!
//! Both are evaluated straight from the defining integral, split into
//! `(0, t/2)`, the symmetric pair `t ± s` for `s < t/2`, and `(3t/2, ∞)`.
//! Nothing here uses `γ(α,τ)`, so the two routes check each other.

use crate::constants::{normalization_c, FractionalOrder};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_graded, integrate_tail, sum_of_parts, QuadratureSpec};

use super::field::{log_remainder, power_remainder};

fn halfline_spec() -> QuadratureSpec {
    QuadratureSpec {
        max_subdivisions: 4000,
        ..QuadratureSpec::with_tolerances(1e-12, 1e-10)
    }
}

fn finish(value: f64, error: f64, converged: bool) -> Result<f64> {
    if converged {
        Ok(value)
    } else {
        Err(Error::NonConverged { value, error })
    }
}

/// `(−Δ)^α_{ℝ₊} y^τ` at `t > 0`.
pub fn halfline_power(order: FractionalOrder, tau: f64, t: f64) -> Result<f64> {
    order.check_tau(tau)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("half-line point must be positive (got {t})")));
    }
    let a2 = 2.0 * order.alpha;
    let tt = t.powf(tau);
    let spec = halfline_spec();
    let r = sum_of_parts(&spec, |part| {
        let head = integrate_graded(
            |y: f64| (tt - y.powf(tau)) * (t - y).powf(-1.0 - a2),
            0.0,
            0.5 * t,
            Some(tau.min(0.0)),
            None,
            part,
        )?;
        let near = integrate_graded(
            |s: f64| {
                let h = s / t;
                -tt * (power_remainder(tau, h) + power_remainder(tau, -h)) * s.powf(-1.0 - a2)
            },
            0.0,
            0.5 * t,
            Some(1.0 - a2),
            None,
            part,
        )?;
        let tail = integrate_tail(
            |y: f64| (tt - y.powf(tau)) * (y - t).powf(-1.0 - a2),
            1.5 * t,
            1.0 + a2 - tau.max(0.0),
            part,
        )?;
        Ok(vec![head, near, tail])
    })?;
    let c = normalization_c(1, order)?;
    finish(c * r.value, c * r.error_estimate, r.converged)
}

/// `(−Δ)^α_{ℝ₊}(−ln y)` at `t > 0`.
pub fn halfline_log(order: FractionalOrder, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("half-line point must be positive (got {t})")));
    }
    let a2 = 2.0 * order.alpha;
    let spec = halfline_spec();
    let r = sum_of_parts(&spec, |part| {
        let head = integrate_graded(
            |y: f64| (y / t).ln() * (t - y).powf(-1.0 - a2),
            0.0,
            0.5 * t,
            Some(-0.5),
            None,
            part,
        )?;
        // −(u(t+s) + u(t−s) − 2u(t)) with u = −ln y equals ln(1 − h²)
        let near = integrate_graded(
            |s: f64| {
                let h = s / t;
                -(log_remainder(h) + log_remainder(-h)) * s.powf(-1.0 - a2)
            },
            0.0,
            0.5 * t,
            Some(1.0 - a2),
            None,
            part,
        )?;
        // the logarithm costs a little decay; grade as if slightly slower
        let tail = integrate_tail(
            |y: f64| (y / t).ln() * (y - t).powf(-1.0 - a2),
            1.5 * t,
            1.0 + a2 - 0.05 * a2,
            part,
        )?;
        Ok(vec![head, near, tail])
    })?;
    let c = normalization_c(1, order)?;
    finish(c * r.value, c * r.error_estimate, r.converged)
}
