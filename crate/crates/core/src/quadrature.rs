//! Adaptive one-dimensional quadrature.
//!
//! Everything here is built on a globally adaptive Gauss–Kronrod (7/15)
//! bisection scheme. On top of it sit
//!
//! * graded variable changes that flatten algebraic endpoint singularities,
//! * an algebraic tail map for semi-infinite ranges,
//! * symmetric-excision principal values with Richardson extrapolation
//!   along a dyadic excision schedule.
//!
//! All routines are pure functions of their inputs and deterministic.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};

/// Tolerances and limits shared by every integration routine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// First excision radius of the principal-value schedule.
    pub excision_initial: f64,
    /// Number of radii in the schedule `excision_initial * 2^-k`.
    pub excision_levels: usize,
    /// Algebraic exponent `e` of a `|t - endpoint|^e` singularity, if known.
    pub singular_exponent_hint: Option<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
            excision_initial: 0.125,
            excision_levels: 24,
            singular_exponent_hint: None,
        }
    }
}

impl QuadratureSpec {
    pub fn with_tolerances(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol >= 0.0 && self.rel_tol >= 0.0) || self.abs_tol + self.rel_tol <= 0.0 {
            return domain_err("quadrature tolerances must be non-negative with a positive sum");
        }
        if self.max_subdivisions < 1 {
            return domain_err("max_subdivisions must be at least 1");
        }
        if !(self.excision_initial > 0.0 && self.excision_initial.is_finite()) {
            return domain_err("excision_initial must be positive");
        }
        if self.excision_levels < 2 {
            return domain_err("excision_levels must be at least 2");
        }
        if let Some(e) = self.singular_exponent_hint {
            if !(e > -1.0) {
                return domain_err("singular exponent hint must exceed -1");
            }
        }
        Ok(())
    }

    /// The dyadic excision radii, strictly decreasing.
    pub fn excision_schedule(&self) -> Vec<f64> {
        (0..self.excision_levels)
            .map(|k| self.excision_initial * 0.5f64.powi(k as i32))
            .collect()
    }

    /// Target accuracy for a result of magnitude `value`.
    pub fn tolerance_for(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }

    fn scaled(&self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..*self
        }
    }
}

/// Outcome of one integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions_used: usize,
    pub converged: bool,
}

impl IntegralResult {
    pub const ZERO: IntegralResult = IntegralResult {
        value: 0.0,
        error_estimate: 0.0,
        subdivisions_used: 0,
        converged: true,
    };

    /// Sum of two partial results; convergence is re-judged against `spec`.
    pub fn combine(self, other: IntegralResult, spec: &QuadratureSpec) -> IntegralResult {
        let value = self.value + other.value;
        let error_estimate = self.error_estimate + other.error_estimate;
        IntegralResult {
            value,
            error_estimate,
            subdivisions_used: self.subdivisions_used + other.subdivisions_used,
            converged: self.converged
                && other.converged
                && error_estimate <= spec.tolerance_for(value).max(tiny_floor(value)),
        }
    }

    pub fn scale(self, factor: f64) -> IntegralResult {
        IntegralResult {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
            ..self
        }
    }

    /// Turns a non-converged result into [`Error::NonConverged`].
    pub fn require_converged(self) -> Result<IntegralResult> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NonConverged {
                value: self.value,
                error: self.error_estimate,
            })
        }
    }
}

// Floor below which an error estimate is pure rounding noise.
fn tiny_floor(value: f64) -> f64 {
    64.0 * f64::EPSILON * value.abs()
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        // ties broken by position so the heap order is fully deterministic
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    if !fc.is_finite() {
        return Err(Error::NonFinite { at: center });
    }
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let (t1, t2) = (center - x, center + x);
        let (f1, f2) = (f(t1), f(t2));
        if !f1.is_finite() {
            return Err(Error::NonFinite { at: t1 });
        }
        if !f2.is_finite() {
            return Err(Error::NonFinite { at: t2 });
        }
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut error = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Panel { a, b, value, error })
}

fn splittable(p: &Panel) -> bool {
    let mid = 0.5 * (p.a + p.b);
    let width = p.b - p.a;
    width > 256.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) && mid > p.a && mid < p.b
}

/// Globally adaptive Gauss–Kronrod integration of `f` over `(a, b)`.
///
/// The worst panel is bisected until the summed error estimate meets
/// `max(abs_tol, rel_tol·|value|)` or `max_subdivisions` bisections have
/// been spent; in the latter case `converged` is false. Endpoints are never
/// evaluated, so integrable endpoint singularities are tolerated.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    spec.validate()?;
    if !(a < b) {
        return domain_err(format!("integration bounds must satisfy a < b (got {a}, {b})"));
    }
    if !(a.is_finite() && b.is_finite()) {
        return domain_err("integrate_adaptive needs finite bounds; use integrate_tail");
    }
    if let Some(e) = spec.singular_exponent_hint {
        // split and grade both ends
        let plain = QuadratureSpec {
            singular_exponent_hint: None,
            ..*spec
        };
        return integrate_graded(f, a, b, Some(e), Some(e), &plain);
    }
    adaptive_core(&f, a, b, spec)
}

fn adaptive_core<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let first = gauss_kronrod(f, a, b)?;
    let mut heap = BinaryHeap::new();
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut total_value = first.value;
    let mut total_error = first.error;
    heap.push(first);
    let mut subdivisions = 0;

    loop {
        let tol = spec.tolerance_for(total_value).max(tiny_floor(total_value));
        if total_error <= tol {
            break;
        }
        if subdivisions >= spec.max_subdivisions {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if !splittable(&worst) {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = gauss_kronrod(f, worst.a, mid)?;
        let right = gauss_kronrod(f, mid, worst.b)?;
        subdivisions += 1;
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if subdivisions % 64 == 0 {
            // periodic re-sum keeps incremental rounding from drifting
            total_value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
            total_error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();
        }
    }
    total_value = frozen_value + heap.iter().map(|p| p.value).sum::<f64>();
    total_error = frozen_error + heap.iter().map(|p| p.error).sum::<f64>();

    let converged = total_error <= spec.tolerance_for(total_value).max(tiny_floor(total_value));
    Ok(IntegralResult {
        value: total_value,
        error_estimate: total_error,
        subdivisions_used: subdivisions,
        converged,
    })
}

/// Evaluates several partial integrals whose sum is wanted, tightening the
/// per-part tolerance once if cancellation between the parts leaves the sum
/// short of its own tolerance.
pub fn sum_of_parts<P>(spec: &QuadratureSpec, parts: P) -> Result<IntegralResult>
where
    P: Fn(&QuadratureSpec) -> Result<Vec<IntegralResult>>,
{
    // judge the total only; partial sums may be far smaller than the parts
    let fold = |rs: Vec<IntegralResult>| {
        let mut acc = IntegralResult::ZERO;
        let mut all = true;
        for r in rs {
            all &= r.converged;
            acc.value += r.value;
            acc.error_estimate += r.error_estimate;
            acc.subdivisions_used += r.subdivisions_used;
        }
        acc.converged = all
            && acc.error_estimate <= spec.tolerance_for(acc.value).max(tiny_floor(acc.value));
        acc
    };
    let n = parts(spec)?;
    let count = n.len().max(1) as f64;
    let first = fold(n);
    if first.converged {
        return Ok(first);
    }
    let target = spec.tolerance_for(first.value) / count;
    // purely absolute: the parts may be much larger than their sum
    let tight = QuadratureSpec {
        abs_tol: target.max(f64::MIN_POSITIVE),
        rel_tol: 0.0,
        ..*spec
    };
    Ok(fold(parts(&tight)?))
}

/// Grading power that turns a `d^e` endpoint behaviour into a bounded,
/// continuous integrand: `m = ceil(2 / (1 + e))`, at least 1.
pub fn grading_power(exponent: f64) -> u32 {
    let m = (2.0 / (1.0 + exponent)).ceil();
    if m.is_finite() && m >= 1.0 {
        m as u32
    } else {
        1
    }
}

// Integrates g(d) over d in (0, len) where d is the distance to the
// singular endpoint, after substituting d = len * v^m.
fn graded_from_endpoint<G: Fn(f64) -> f64>(
    g: &G,
    endpoint: f64,
    len: f64,
    exponent: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    // below this distance `endpoint ± d` rounds onto the endpoint itself
    let collapse = 4.0 * f64::EPSILON * endpoint.abs();
    let m = grading_power(exponent);
    if m == 1 {
        return adaptive_core(g, 0.0, len, spec);
    }
    if exponent <= -1.0 {
        return domain_err("endpoint exponent must exceed -1");
    }
    let mf = m as f64;
    let h = |v: f64| {
        let d = len * v.powi(m as i32);
        if d <= 0.0 {
            return 0.0;
        }
        let jac = mf * len * v.powi(m as i32 - 1);
        let val = g(d);
        if !val.is_finite() && (d <= collapse || jac < 1e-250) {
            // graded node collapsed onto the endpoint
            0.0
        } else {
            val * jac
        }
    };
    adaptive_core(&h, 0.0, 1.0, spec)
}

/// Integrates `f` over `(a, b)` with optional graded transforms at either end.
///
/// `left` / `right` are the algebraic exponents of the endpoint behaviour.
/// When both are given the range is split at its midpoint.
pub fn integrate_graded<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    left: Option<f64>,
    right: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    spec.validate()?;
    if !(a < b) {
        return domain_err(format!("integration bounds must satisfy a < b (got {a}, {b})"));
    }
    for e in [left, right].into_iter().flatten() {
        if !(e > -1.0) {
            return domain_err("endpoint exponent must exceed -1");
        }
    }
    match (left, right) {
        (None, None) => adaptive_core(&f, a, b, spec),
        (Some(e), None) => graded_from_endpoint(&|d| f(a + d), a, b - a, e, spec),
        (None, Some(e)) => graded_from_endpoint(&|d| f(b - d), b, b - a, e, spec),
        (Some(el), Some(er)) => {
            let mid = 0.5 * (a + b);
            let fl = |d: f64| f(a + d);
            let fr = |d: f64| f(b - d);
            sum_of_parts(spec, |part| {
                let l = graded_from_endpoint(&fl, a, mid - a, el, part)?;
                let r = graded_from_endpoint(&fr, b, b - mid, er, part)?;
                Ok(vec![l, r])
            })
        }
    }
}

/// Integrates `f` over `(a, b)` when `f·(b − t)^(−exponent)` stays bounded
/// near `b`, via `t = b − (b − a)(1 − u)^m` with `m` from [`grading_power`].
pub fn integrate_endpoint_singular<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    exponent: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    integrate_graded(f, a, b, None, Some(exponent), spec)
}

/// Integrates `f` over `(a, ∞)` for `a > 0` when `f(t) ~ t^(−decay)`,
/// `decay > 1`, using `t = a / u`.
pub fn integrate_tail<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    decay: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    if !(a > 0.0) {
        return domain_err("integrate_tail needs a positive lower bound");
    }
    if !(decay > 1.0) {
        return domain_err("tail integrand must decay faster than 1/t");
    }
    // g(u) = f(a/u) a/u² ~ u^(decay - 2) as u -> 0
    let g = |u: f64| {
        let t = a / u;
        if !t.is_finite() {
            return 0.0;
        }
        f(t) * a / (u * u)
    };
    integrate_graded(g, 0.0, 1.0, Some(decay - 2.0), None, spec)
}

/// Principal value of `∫_a^b f` around an interior point `c`, assuming the
/// excised integral behaves like `L + C ε` as the excision radius shrinks.
pub fn principal_value<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    c: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    principal_value_with_order(f, a, b, c, 1.0, spec)
}

/// Principal value with a known leading excision-error exponent `order`
/// (`I(ε) = L + C ε^order + …`).
///
/// The excised integrals are evaluated along the dyadic schedule
/// `ε_k = ε₀·2^(−k)` (with `ε₀` clamped inside `(a, b)`), folding the two
/// shells `c ± (ε_{k+1}, ε_k)` into one integrand. Consecutive values are
/// combined by two-point Richardson extrapolation; the result converges when
/// two successive extrapolants agree within tolerance.
pub fn principal_value_with_order<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    c: f64,
    order: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    spec.validate()?;
    if !(a < c && c < b) {
        return domain_err(format!("singular point {c} must lie strictly inside ({a}, {b})"));
    }
    if !(order > 0.0) {
        return domain_err("excision order must be positive");
    }
    let eps0 = spec.excision_initial.min(0.5 * (c - a).min(b - c));
    let outer_spec = QuadratureSpec {
        singular_exponent_hint: None,
        ..*spec
    };
    let hint = spec.singular_exponent_hint;
    let quarter = outer_spec.scaled(0.25);
    let outer = sum_of_parts(&quarter, |part| {
        Ok(vec![
            integrate_graded(&f, a, c - eps0, hint, None, part)?,
            integrate_graded(&f, c + eps0, b, None, hint, part)?,
        ])
    })?;

    let folded = |s: f64| f(c + s) + f(c - s);
    let factor = 2f64.powf(order);
    let mut excised = outer.value;
    let mut quad_error = outer.error_estimate;
    let mut subdivisions = outer.subdivisions_used;
    let mut quad_ok = outer.converged;
    let mut prev_extrap: Option<f64> = None;
    let mut last = IntegralResult {
        value: excised,
        error_estimate: f64::INFINITY,
        subdivisions_used: subdivisions,
        converged: false,
    };
    let mut eps = eps0;
    for _ in 1..spec.excision_levels {
        let next = 0.5 * eps;
        let shell = adaptive_core(&folded, next, eps, &quarter)?;
        quad_error += shell.error_estimate;
        subdivisions += shell.subdivisions_used;
        quad_ok &= shell.converged;
        let refined = excised + shell.value;
        let extrap = (factor * refined - excised) / (factor - 1.0);
        excised = refined;
        eps = next;
        if let Some(p) = prev_extrap {
            let diff = (extrap - p).abs();
            let error_estimate = diff + quad_error;
            last = IntegralResult {
                value: extrap,
                error_estimate,
                subdivisions_used: subdivisions,
                converged: quad_ok
                    && error_estimate <= spec.tolerance_for(extrap).max(tiny_floor(extrap)),
            };
            if last.converged {
                break;
            }
        }
        prev_extrap = Some(extrap);
    }
    Ok(last)
}

/// Two-level Richardson extrapolation of samples `(h1, v1)`, `(h2, v2)`
/// assuming `v(h) = L + C h^order`.
pub fn richardson(h1: f64, v1: f64, h2: f64, v2: f64, order: f64) -> f64 {
    let q = (h2 / h1).powf(order);
    (v2 - q * v1) / (1.0 - q)
}
