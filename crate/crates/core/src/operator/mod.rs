//! Pointwise evaluation of the regional fractional Laplacian.
//!
//! Around the evaluation point `x` the integral is split at a near radius
//! `r₀ < ρ(x)`. Inside, directions `±ω` are paired, so the integrand becomes
//! `−(u(x+sω) + u(x−sω) − 2u(x)) s^{−1−2α}`: the gradient term cancels exactly
//! and what is left is `O(s^{1−2α})`, absolutely integrable for every
//! `α ∈ (0,1)`. Outside, each ray is integrated up to its exit point, graded
//! towards the boundary with the field's boundary exponent.

mod field;
mod halfline;

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{normalization_c, FractionalOrder};
use crate::error::{domain_err, Error, Result};
use crate::geometry::Domain;
use crate::quadrature::{integrate_graded, sum_of_parts, IntegralResult, QuadratureSpec};

pub use field::{
    log_remainder, power_remainder, Affine, Combination, Constant, FnField, NodalField,
    Polynomial1d, ScalarField, Spliced,
};
pub use halfline::{halfline_log, halfline_power};

/// Default near radius as a fraction of `ρ(x)`.
pub const NEAR_FRACTION: f64 = 0.5;

/// Angular node counts for the disk: start and cap.
pub const DISK_MIN_DIRECTIONS: usize = 64;
pub const DISK_MAX_DIRECTIONS: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorSample {
    pub x: Vec<f64>,
    pub value: f64,
    pub error_estimate: f64,
    /// Radius of the paired near field.
    pub excision_radius_used: f64,
    /// Radius of the innermost core of the near field, which is either
    /// bounded through the Hessian or replaced by a Taylor model; zero when
    /// the near field is integrated to the centre.
    pub inner_cutoff: f64,
    /// Number of directions in the angular rule (1 on an interval).
    pub directions: usize,
}

/// `(−Δ)^α_Ω u(x)` on an interval, or on a disk via [`regional_apply_disk`].
pub fn regional_apply(
    u: &dyn ScalarField,
    x: &[f64],
    domain: &Domain,
    order: FractionalOrder,
    spec: &QuadratureSpec,
) -> Result<OperatorSample> {
    let rho = domain.boundary_distance(x)?;
    regional_apply_with_radius(u, x, domain, order, spec, NEAR_FRACTION * rho)
}

/// As [`regional_apply`] with an explicit near radius `0 < r₀ < ρ(x)`.
pub fn regional_apply_with_radius(
    u: &dyn ScalarField,
    x: &[f64],
    domain: &Domain,
    order: FractionalOrder,
    spec: &QuadratureSpec,
    near_radius: f64,
) -> Result<OperatorSample> {
    match domain {
        Domain::Interval { .. } => apply_interval(u, x, domain, order, spec, near_radius),
        Domain::Ball { center, .. } if center.len() == 2 => {
            apply_disk(u, x, domain, order, spec, near_radius)
        }
        Domain::Ball { center, .. } => Err(Error::Unsupported(format!(
            "pointwise operator in dimension {}",
            center.len()
        ))),
    }
}

/// `(−Δ)^α_Ω u(x)` on a disk in polar coordinates centred at `x`, with a
/// trapezoid rule in the angle doubled from 64 directions until two
/// successive rules agree.
pub fn regional_apply_disk(
    u: &dyn ScalarField,
    x: &[f64],
    disk: &Domain,
    order: FractionalOrder,
    spec: &QuadratureSpec,
) -> Result<OperatorSample> {
    match disk {
        Domain::Ball { center, .. } if center.len() == 2 => {
            let rho = disk.boundary_distance(x)?;
            apply_disk(u, x, disk, order, spec, NEAR_FRACTION * rho)
        }
        _ => domain_err("regional_apply_disk needs a two-dimensional ball"),
    }
}

/// Treatment of the innermost part `s < r_c` of the paired near field.
#[derive(Debug, Clone, Copy)]
enum Core {
    /// Integrated to the centre.
    None,
    /// Dropped; its size is bounded through the field's Hessian bound.
    Bounded { radius: f64, error: f64 },
    /// Replaced by a fitted even Taylor polynomial; see `taylor_core`.
    Taylor { radius: f64 },
}

struct Setup {
    rho: f64,
    c: f64,
    a2: f64,
    near: f64,
    core: Core,
}

impl Setup {
    fn cutoff(&self) -> f64 {
        match self.core {
            Core::None => 0.0,
            Core::Bounded { radius, .. } | Core::Taylor { radius } => radius,
        }
    }

    fn bounded_error(&self) -> f64 {
        match self.core {
            Core::Bounded { error, .. } => error,
            _ => 0.0,
        }
    }
}

/// Taylor core of a field without an exact symmetric difference, as a
/// fraction of the near radius.
const TAYLOR_CORE_FRACTION: f64 = 0.5;

fn setup(
    u: &dyn ScalarField,
    x: &[f64],
    domain: &Domain,
    order: FractionalOrder,
    spec: &QuadratureSpec,
    near_radius: f64,
    surface: f64,
) -> Result<Setup> {
    spec.validate()?;
    let rho = domain.boundary_distance(x)?;
    if !(near_radius > 0.0 && near_radius < rho) {
        return Err(Error::ExcisionTooLarge {
            requested: near_radius,
            rho,
        });
    }
    let a2 = 2.0 * order.alpha;
    let c = normalization_c(domain.dim(), order)?;
    let core = if !u.exact_difference() {
        Core::Taylor {
            radius: TAYLOR_CORE_FRACTION * near_radius,
        }
    } else {
        // Dropping s < r_c costs at most c·M·σ·r_c^{2−2α}/(2(2−2α));
        // keep that below abs_tol/2.
        match u.c2_bound(x, near_radius) {
            Some(m) if !m.is_finite() => {
                return Err(Error::ExcisionTooLarge {
                    requested: near_radius,
                    rho,
                })
            }
            Some(m) if m > 0.0 && spec.abs_tol > 0.0 => {
                let k = c * m * surface / (2.0 * (2.0 - a2));
                let rc = (0.5 * spec.abs_tol / k)
                    .powf(1.0 / (2.0 - a2))
                    .min(1e-3 * near_radius);
                Core::Bounded {
                    radius: rc,
                    error: k * rc.powf(2.0 - a2),
                }
            }
            _ => Core::None,
        }
    };
    Ok(Setup {
        rho,
        c,
        a2,
        near: near_radius,
        core,
    })
}

/// `∫_{r_c}^{r₀} −(u(x+sω) + u(x−sω) − 2u(x)) s^{−1−2α} ds`, plus the
/// Taylor core when the field asks for one.
fn near_field(
    u: &dyn ScalarField,
    x: &[f64],
    dir: &[f64],
    st: &Setup,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let a2 = st.a2;
    let g = |s: f64| -u.symmetric_difference(x, dir, s) * s.powf(-1.0 - a2);
    let (lo, hint) = match st.core {
        Core::None => (0.0, Some(1.0 - a2)),
        Core::Bounded { radius, .. } | Core::Taylor { radius } => (radius, None),
    };
    let Core::Taylor { radius: h } = st.core else {
        return integrate_graded(g, lo, st.near, hint, None, spec);
    };
    let core = taylor_core(u, x, dir, h, a2, spec);
    let ring = integrate_graded(g, core.1, st.near, None, None, spec)?;
    Ok(ring.combine(core.0, spec))
}

/// Integral of `−D(s)s^{1−2α}` over `(0, h)` where the quotient
/// `D(s) = (u(x+sω)+u(x−sω)−2u(x))/s²` is fitted by `A + Bs² + Cs⁴` through
/// `s = h, h/2, h/4`. The radius is halved until the `C` term, taken as the
/// error, is within budget or rounding in the quotients would dominate.
/// Returns the core integral and the radius used.
fn taylor_core(
    u: &dyn ScalarField,
    x: &[f64],
    dir: &[f64],
    start: f64,
    a2: f64,
    spec: &QuadratureSpec,
) -> (IntegralResult, f64) {
    let ux = u.value(x).abs();
    let mut h = start;
    let mut best: Option<(IntegralResult, f64)> = None;
    for _ in 0..24 {
        let q = |s: f64| u.symmetric_difference(x, dir, s) / (s * s);
        let (t1, t2, t3) = (h * h, 0.25 * h * h, h * h / 16.0);
        let (d1, d2, d3) = (q(h), q(0.5 * h), q(0.25 * h));
        let f12 = (d1 - d2) / (t1 - t2);
        let f23 = (d2 - d3) / (t2 - t3);
        let c = (f12 - f23) / (t1 - t3);
        let b = f23 - c * (t2 + t3);
        let a = d3 - b * t3 - c * t3 * t3;
        let m = |k: f64| h.powf(k - a2) / (k - a2);
        let value = -(a * m(2.0) + b * m(4.0) + c * m(6.0));
        let truncation = (c * m(6.0)).abs();
        // rounding in the smallest quotient, amplified by the fit
        let rounding = 8.0 * f64::EPSILON * ux / t3 * m(2.0);
        let result = IntegralResult {
            value,
            error_estimate: truncation + rounding,
            subdivisions_used: 0,
            converged: true,
        };
        let better = best
            .as_ref()
            .is_none_or(|(r, _)| result.error_estimate < r.error_estimate);
        if better {
            best = Some((result, h));
        }
        if truncation <= 0.25 * spec.tolerance_for(value) || rounding > truncation {
            break;
        }
        h *= 0.5;
    }
    let (mut r, h) = best.expect("at least one core evaluation");
    r.converged = r.error_estimate <= spec.tolerance_for(r.value);
    (r, h)
}

/// `∫_{r₀}^{exit} (u(x) − u(x+sω)) s^{−1−2α} ds`, integrated in the distance
/// `d = exit − s` to the boundary.
#[allow(clippy::too_many_arguments)]
fn far_field(
    u: &dyn ScalarField,
    ux: f64,
    x: &[f64],
    dir: &[f64],
    domain: &Domain,
    st: &Setup,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let exit = domain.ray_exit_unchecked(x, dir);
    let len = exit - st.near;
    if len <= 0.0 {
        return Ok(IntegralResult::ZERO);
    }
    let a2 = st.a2;
    let g = |d: f64| {
        let (z, rho_z) = domain.ray_point(x, dir, exit, d);
        let s = exit - d;
        if rho_z <= 0.0 {
            return 0.0;
        }
        (ux - u.value_at(&z, rho_z)) * s.powf(-1.0 - a2)
    };
    let hint = u.boundary_exponent().map(|e| e.min(0.0));
    let mut cuts: Vec<f64> = u
        .breakpoints(x, dir)
        .into_iter()
        .map(|s| exit - s)
        .filter(|d| *d > 0.0 && *d < len)
        .collect();
    if cuts.is_empty() {
        return integrate_graded(g, 0.0, len, hint, None, spec);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|p, q| (*p - *q).abs() <= 1e-14 * len);
    let mut edges = vec![0.0];
    edges.extend(cuts);
    edges.push(len);
    let pieces = (edges.len() - 1) as f64;
    sum_of_parts(spec, |part| {
        let piece_spec = QuadratureSpec {
            abs_tol: part.abs_tol / pieces,
            ..*part
        };
        edges
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let h = if i == 0 { hint } else { None };
                integrate_graded(g, w[0], w[1], h, None, &piece_spec)
            })
            .collect()
    })
}

fn scaled_tolerance(spec: &QuadratureSpec, c: f64, parts: f64) -> QuadratureSpec {
    QuadratureSpec {
        abs_tol: spec.abs_tol / (c * parts),
        ..*spec
    }
}

fn apply_interval(
    u: &dyn ScalarField,
    x: &[f64],
    domain: &Domain,
    order: FractionalOrder,
    spec: &QuadratureSpec,
    near_radius: f64,
) -> Result<OperatorSample> {
    let st = setup(u, x, domain, order, spec, near_radius, 2.0)?;
    let ux = u.value_at(x, st.rho);
    let inner = scaled_tolerance(spec, st.c, 2.0);
    let r = sum_of_parts(&inner, |part| {
        Ok(vec![
            near_field(u, x, &[1.0], &st, part)?,
            far_field(u, ux, x, &[1.0], domain, &st, part)?,
            far_field(u, ux, x, &[-1.0], domain, &st, part)?,
        ])
    })?;
    let value = st.c * r.value;
    let error = st.c * r.error_estimate + st.bounded_error();
    if !r.converged || !value.is_finite() {
        return Err(Error::NonConverged { value, error });
    }
    Ok(OperatorSample {
        x: x.to_vec(),
        value,
        error_estimate: error,
        excision_radius_used: st.near,
        inner_cutoff: st.cutoff(),
        directions: 1,
    })
}

fn apply_disk(
    u: &dyn ScalarField,
    x: &[f64],
    domain: &Domain,
    order: FractionalOrder,
    spec: &QuadratureSpec,
    near_radius: f64,
) -> Result<OperatorSample> {
    use std::f64::consts::PI;
    let st = setup(u, x, domain, order, spec, near_radius, 2.0 * PI)?;
    let ux = u.value_at(x, st.rho);
    // per-direction integrals carry a share of the budget; π is the angular measure
    let inner = scaled_tolerance(spec, st.c, 2.0 * PI);

    let eval_dir = |theta: f64| -> Result<IntegralResult> {
        let w = [theta.cos(), theta.sin()];
        let m = [-w[0], -w[1]];
        sum_of_parts(&inner, |part| {
            Ok(vec![
                near_field(u, x, &w, &st, part)?,
                far_field(u, ux, x, &w, domain, &st, part)?,
                far_field(u, ux, x, &m, domain, &st, part)?,
            ])
        })
    };
    let sum_nodes = |nodes: Vec<f64>| -> Result<(f64, f64, bool)> {
        let results: Vec<IntegralResult> = nodes
            .into_par_iter()
            .map(eval_dir)
            .collect::<Result<Vec<_>>>()?;
        let mut v = 0.0;
        let mut e = 0.0;
        let mut ok = true;
        for r in results {
            v += r.value;
            e += r.error_estimate;
            ok &= r.converged;
        }
        Ok((v, e, ok))
    };

    let mut n = DISK_MIN_DIRECTIONS;
    let (mut sum, mut err_sum, mut ok) =
        sum_nodes((0..n).map(|k| k as f64 * PI / n as f64).collect())?;
    let mut estimate = PI / n as f64 * sum;
    loop {
        let fresh: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) * PI / n as f64).collect();
        let (s, e, o) = sum_nodes(fresh)?;
        sum += s;
        err_sum += e;
        ok &= o;
        n *= 2;
        let refined = PI / n as f64 * sum;
        let diff = (refined - estimate).abs();
        estimate = refined;
        let value = st.c * estimate;
        let error = st.c * (diff + PI / n as f64 * err_sum) + st.bounded_error();
        let tol = spec.tolerance_for(value);
        if st.c * diff <= tol || n >= DISK_MAX_DIRECTIONS {
            if !ok || st.c * diff > tol || !value.is_finite() {
                return Err(Error::NonConverged { value, error });
            }
            return Ok(OperatorSample {
                x: x.to_vec(),
                value,
                error_estimate: error,
                excision_radius_used: st.near,
                inner_cutoff: st.cutoff(),
                directions: n,
            });
        }
    }
}
