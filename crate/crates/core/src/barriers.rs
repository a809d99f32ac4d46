//! Boundary barriers `V_τ`, `V_*`, `w₁` and boundary-asymptotic sweeps.
//!
//! A barrier is `p(ρ(x))` for a radial profile `p`. Inside the layer
//! `ρ < δ` the profile is `t^τ` or `−ln t`; on `[δ, ρ_max]` it is a cubic
//! matching value, slope and curvature at `δ` with zero slope at `ρ_max`,
//! so the barrier stays C² across the midpoint of an interval and the
//! centre of a ball, where `ρ` itself has a kink.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{
    c_alpha, d_alpha, gamma_constant, normalization_c, ExponentRegime, FractionalOrder, Regime,
};
use crate::error::{domain_err, Error, Result};
use crate::geometry::Domain;
use crate::operator::{log_remainder, power_remainder, regional_apply, ScalarField};
use crate::quadrature::{richardson, QuadratureSpec};

/// Exponent of the power barrier subtracted in `w₁ = V_* − V_{τ₀}`.
pub const W1_TAU: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "tau", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BarrierKind {
    Power(f64),
    Log,
    W1,
}

/// Singular part of a profile inside the layer.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Singular {
    Power(f64),
    Log,
}

impl Singular {
    fn value(self, t: f64) -> f64 {
        match self {
            Singular::Power(tau) => t.powf(tau),
            Singular::Log => -t.ln(),
        }
    }

    fn d1(self, t: f64) -> f64 {
        match self {
            Singular::Power(tau) => tau * t.powf(tau - 1.0),
            Singular::Log => -1.0 / t,
        }
    }

    fn d2(self, t: f64) -> f64 {
        match self {
            Singular::Power(tau) => tau * (tau - 1.0) * t.powf(tau - 2.0),
            Singular::Log => 1.0 / (t * t),
        }
    }

    /// `p(t + e) − p(t) − p′(t)e`.
    fn remainder(self, t: f64, e: f64) -> f64 {
        match self {
            Singular::Power(tau) => t.powf(tau) * power_remainder(tau, e / t),
            Singular::Log => log_remainder(e / t),
        }
    }

    /// `p′(δ) − p′(t)`.
    fn slope_change(self, delta: f64, t: f64) -> f64 {
        match self {
            Singular::Power(tau) => {
                let l = ((t - delta) / delta).ln_1p();
                -tau * delta.powf(tau - 1.0) * ((tau - 1.0) * l).exp_m1()
            }
            Singular::Log => (delta - t) / (t * delta),
        }
    }

    /// Exponent used to grade quadrature towards the boundary.
    fn grading(self) -> f64 {
        match self {
            Singular::Power(tau) => tau,
            Singular::Log => -0.5,
        }
    }
}

/// Radial profile: a weighted sum of singular parts below `δ`, one cubic above.
#[derive(Debug, Clone, PartialEq)]
struct Profile {
    terms: Vec<(f64, Singular)>,
    delta: f64,
    /// `f, f′, f″/2, c₃` of the cubic in `e = t − δ`.
    cubic: [f64; 4],
}

impl Profile {
    fn new(terms: Vec<(f64, Singular)>, delta: f64, rho_max: f64) -> Self {
        let sum = |g: fn(Singular, f64) -> f64| -> f64 {
            terms.iter().map(|(w, s)| w * g(*s, delta)).sum()
        };
        let f = sum(Singular::value);
        let f1 = sum(Singular::d1);
        let f2 = sum(Singular::d2);
        let l = rho_max - delta;
        let c3 = -(f1 + f2 * l) / (3.0 * l * l);
        Profile {
            terms,
            delta,
            cubic: [f, f1, 0.5 * f2, c3],
        }
    }

    fn singular_sum(&self, g: impl Fn(Singular) -> f64) -> f64 {
        self.terms.iter().map(|(w, s)| w * g(*s)).sum()
    }

    fn value(&self, t: f64) -> f64 {
        if t < self.delta {
            self.singular_sum(|s| s.value(t))
        } else {
            let e = t - self.delta;
            let [f, f1, h2, c3] = self.cubic;
            f + e * (f1 + e * (h2 + e * c3))
        }
    }

    fn d1(&self, t: f64) -> f64 {
        if t < self.delta {
            self.singular_sum(|s| s.d1(t))
        } else {
            let e = t - self.delta;
            let [_, f1, h2, c3] = self.cubic;
            f1 + e * (2.0 * h2 + 3.0 * c3 * e)
        }
    }

    fn d2(&self, t: f64) -> f64 {
        if t < self.delta {
            self.singular_sum(|s| s.d2(t))
        } else {
            let [_, _, h2, c3] = self.cubic;
            2.0 * h2 + 6.0 * c3 * (t - self.delta)
        }
    }

    /// `p(δ + e) − p(δ) − p′(δ)e`.
    fn remainder_at_join(&self, e: f64) -> f64 {
        if e < 0.0 {
            self.singular_sum(|s| s.remainder(self.delta, e))
        } else {
            let [_, _, h2, c3] = self.cubic;
            e * e * (h2 + c3 * e)
        }
    }

    /// `p(t + e) − p(t) − p′(t)e` without cancellation.
    fn remainder(&self, t: f64, e: f64) -> f64 {
        let inside = t < self.delta;
        if inside && t + e < self.delta {
            return self.singular_sum(|s| s.remainder(t, e));
        }
        let e0 = t - self.delta;
        if !inside && t + e >= self.delta {
            let [_, _, h2, c3] = self.cubic;
            return e * e * (h2 + 3.0 * c3 * e0 + c3 * e);
        }
        // the step crosses δ: expand both ends about δ
        let slope_change = if inside {
            self.singular_sum(|s| s.slope_change(self.delta, t))
        } else {
            let [_, _, h2, c3] = self.cubic;
            -e0 * (2.0 * h2 + 3.0 * c3 * e0)
        };
        slope_change * e + self.remainder_at_join(e0 + e) - self.remainder_at_join(e0)
    }

    /// Supremum of `|p″|` over `[lo, hi]`. Each singular `|p″|` decreases
    /// in `t` and the cubic's `p″` is linear, so endpoints suffice.
    fn d2_sup(&self, lo: f64, hi: f64) -> f64 {
        let mut m: f64 = 0.0;
        if lo < self.delta {
            m = m.max(self.terms.iter().map(|(w, s)| (w * s.d2(lo)).abs()).sum());
        }
        if hi >= self.delta {
            let [_, _, h2, c3] = self.cubic;
            let e_lo = (lo - self.delta).max(0.0);
            let e_hi = hi - self.delta;
            m = m
                .max((2.0 * h2 + 6.0 * c3 * e_lo).abs())
                .max((2.0 * h2 + 6.0 * c3 * e_hi).abs());
        }
        m
    }

    /// Smallest value of the profile on `[δ, ρ_max]` and where it occurs.
    fn join_minimum(&self, rho_max: f64) -> (f64, f64) {
        let [_, f1, h2, c3] = self.cubic;
        let l = rho_max - self.delta;
        let mut candidates = vec![0.0, l];
        // p′(e) = f1 + 2h2 e + 3c3 e²
        let (qa, qb, qc) = (3.0 * c3, 2.0 * h2, f1);
        if qa.abs() > 0.0 {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let r = disc.sqrt();
                candidates.push((-qb + r) / (2.0 * qa));
                candidates.push((-qb - r) / (2.0 * qa));
            }
        } else if qb != 0.0 {
            candidates.push(-qc / qb);
        }
        candidates
            .into_iter()
            .filter(|e| (0.0..=l).contains(e))
            .map(|e| (self.value(self.delta + e), self.delta + e))
            .fold((f64::INFINITY, self.delta), |acc, c| if c.0 < acc.0 { c } else { acc })
    }
}

/// A barrier `p(ρ(x))` on a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Barrier {
    pub kind: BarrierKind,
    pub delta: f64,
    pub domain: Domain,
    rho_max: f64,
    profile: Profile,
}

/// Builds `V_τ`, `V_*` or `w₁ = V_* − V_{1/4}` with layer width `δ`.
pub fn make_barrier(kind: BarrierKind, delta: f64, domain: &Domain) -> Result<Barrier> {
    let rho_max = domain.inradius();
    let limit = 0.5f64.min(0.5 * rho_max);
    if !(delta > 0.0 && delta < limit) {
        return domain_err(format!("layer width delta = {delta} outside (0, {limit})"));
    }
    let terms = match kind {
        BarrierKind::Power(tau) => {
            if !(tau > -1.0 && tau.is_finite()) {
                return domain_err(format!("barrier exponent tau = {tau} must exceed -1"));
            }
            vec![(1.0, Singular::Power(tau))]
        }
        BarrierKind::Log => vec![(1.0, Singular::Log)],
        BarrierKind::W1 => vec![(1.0, Singular::Log), (-1.0, Singular::Power(W1_TAU))],
    };
    let profile = Profile::new(terms, delta, rho_max);
    let (minimum, at) = profile.join_minimum(rho_max);
    // the layer part is positive and, for w₁, decreasing, so δ covers it
    if !(minimum > 0.0) {
        return Err(Error::PositivityViolation { minimum, at });
    }
    Ok(Barrier {
        kind,
        delta,
        domain: domain.clone(),
        rho_max,
        profile,
    })
}

impl Barrier {
    /// The radial profile `p(t)` for `0 < t ≤ ρ_max`.
    pub fn profile(&self, t: f64) -> f64 {
        self.profile.value(t)
    }

    /// `p′(t)`.
    pub fn profile_slope(&self, t: f64) -> f64 {
        self.profile.d1(t)
    }

    /// `p″(t)`.
    pub fn profile_curvature(&self, t: f64) -> f64 {
        self.profile.d2(t)
    }

    /// Largest boundary distance in the domain.
    pub fn rho_max(&self) -> f64 {
        self.rho_max
    }
}

impl ScalarField for Barrier {
    fn value(&self, x: &[f64]) -> f64 {
        self.profile.value(self.domain.signed_distance(x))
    }

    fn value_at(&self, _z: &[f64], rho: f64) -> f64 {
        self.profile.value(rho)
    }

    fn symmetric_difference(&self, x: &[f64], dir: &[f64], s: f64) -> f64 {
        let rho = self.domain.signed_distance(x);
        let (plus, minus, sum) = self.domain.distance_increments(x, dir, s);
        self.profile.d1(rho) * sum
            + self.profile.remainder(rho, plus)
            + self.profile.remainder(rho, minus)
    }

    fn exact_difference(&self) -> bool {
        true
    }

    fn c2_bound(&self, x: &[f64], radius: f64) -> Option<f64> {
        let rho = self.domain.signed_distance(x);
        let lo = rho - radius;
        if !(lo > 0.0) {
            return Some(f64::INFINITY);
        }
        let hi = (rho + radius).min(self.rho_max);
        let mut bound = self.profile.d2_sup(lo, hi);
        if let Domain::Ball { .. } = self.domain {
            // |p′(t)|·|∇²ρ| = |p′(t)|/(R − t) ≤ sup_{[t,R]} |p″| since p′(R) = 0
            bound += self.profile.d2_sup(lo, self.rho_max);
        }
        Some(bound)
    }

    fn boundary_exponent(&self) -> Option<f64> {
        self.profile
            .terms
            .iter()
            .map(|(_, s)| s.grading())
            .reduce(f64::min)
    }

    fn breakpoints(&self, x: &[f64], dir: &[f64]) -> Vec<f64> {
        match &self.domain {
            Domain::Interval { a, b } => {
                let sign = dir[0].signum();
                [a + self.delta, 0.5 * (a + b), b - self.delta]
                    .into_iter()
                    .map(|p| (p - x[0]) * sign)
                    .filter(|s| *s > 0.0)
                    .collect()
            }
            Domain::Ball { center, radius } => {
                let r = radius - self.delta;
                let mut proj = 0.0;
                let mut dist2 = 0.0;
                for ((xi, ci), wi) in x.iter().zip(center).zip(dir) {
                    proj += (xi - ci) * wi;
                    dist2 += (xi - ci) * (xi - ci);
                }
                let disc = proj * proj - dist2 + r * r;
                if disc <= 0.0 {
                    return Vec::new();
                }
                let q = disc.sqrt();
                [-proj - q, -proj + q].into_iter().filter(|s| *s > 0.0).collect()
            }
        }
    }
}

/// How a sweep normalises raw operator values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Scaling {
    /// `raw · ρ^exponent`.
    Power { exponent: f64 },
    /// `raw / V_*`, with `V_* = −ln ρ` in the layer.
    InverseLog,
}

impl Scaling {
    pub fn apply(&self, rho: f64, raw: f64) -> f64 {
        match *self {
            Scaling::Power { exponent } => raw * rho.powf(exponent),
            Scaling::InverseLog => raw / -rho.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: f64,
    pub raw: f64,
    pub scaled: f64,
    pub err: f64,
    pub valid: bool,
}

/// A constant the measured limit may be compared against.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitCandidate {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub scaling: Scaling,
    /// Richardson limit of the scaled values from the last two valid rows,
    /// or the last scaled value when no extrapolation order applies.
    pub extrapolated_limit: f64,
    pub extrapolation_order: Option<f64>,
    /// Least-squares slope of `ln|raw|` against `ln ρ`.
    pub fit_exponent: f64,
    /// Limit predicted on an interval.
    pub expected_limit: Option<f64>,
    /// Candidate constants recorded on a ball, none asserted.
    pub candidates: Vec<LimitCandidate>,
}

impl SweepReport {
    pub fn valid_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.valid)
    }
}

/// Default tolerances for sweep evaluations.
pub fn sweep_spec() -> QuadratureSpec {
    QuadratureSpec {
        max_subdivisions: 4000,
        ..QuadratureSpec::with_tolerances(1e-9, 1e-8)
    }
}

/// Power of a barrier blowing up like `ρ^τ`, for scaling and limits.
fn leading_tau(kind: BarrierKind) -> Option<f64> {
    match kind {
        BarrierKind::Power(tau) => Some(tau),
        BarrierKind::W1 => Some(W1_TAU),
        BarrierKind::Log => None,
    }
}

/// Evaluates the operator on the barrier at boundary distances `rhos`
/// (decreasing, below `δ/4`), scales, fits and extrapolates.
pub fn asymptotic_sweep(
    barrier: &Barrier,
    order: FractionalOrder,
    rhos: &[f64],
    spec: &QuadratureSpec,
) -> Result<SweepReport> {
    if rhos.len() < 2 {
        return domain_err("a sweep needs at least two boundary distances");
    }
    if rhos.windows(2).any(|w| !(w[1] < w[0])) {
        return domain_err("sweep distances must be strictly decreasing");
    }
    if !(rhos[0] < 0.25 * barrier.delta) {
        return domain_err(format!(
            "sweep distance {} not below delta/4 = {}",
            rhos[0],
            0.25 * barrier.delta
        ));
    }
    if let BarrierKind::Power(tau) = barrier.kind {
        order.check_tau(tau)?;
    }
    let a2 = 2.0 * order.alpha;
    let scaling = match leading_tau(barrier.kind) {
        Some(tau) => Scaling::Power { exponent: a2 - tau },
        None => Scaling::InverseLog,
    };
    let layer = barrier.domain.layer_samples(barrier.delta, rhos)?;
    let rows: Vec<SweepRow> = layer
        .points
        .par_iter()
        .zip(rhos.par_iter())
        .map(|(x, &rho)| match regional_apply(barrier, x, &barrier.domain, order, spec) {
            Ok(s) => SweepRow {
                rho,
                raw: s.value,
                scaled: scaling.apply(rho, s.value),
                err: scaling.apply(rho, s.error_estimate).abs(),
                valid: true,
            },
            Err(_) => SweepRow {
                rho,
                raw: f64::NAN,
                scaled: f64::NAN,
                err: f64::NAN,
                valid: false,
            },
        })
        .collect();

    let is_interval = matches!(barrier.domain, Domain::Interval { .. });
    let extrapolation_order = leading_tau(barrier.kind).map(|tau| {
        let p = a2.min(a2 - tau);
        if is_interval {
            p
        } else {
            p.min(1.0)
        }
    });
    let valid: Vec<&SweepRow> = rows.iter().filter(|r| r.valid).collect();
    let extrapolated_limit = match (valid.as_slice(), extrapolation_order) {
        ([.., r1, r2], Some(p)) => richardson(r1.rho, r1.scaled, r2.rho, r2.scaled, p),
        ([.., r], _) => r.scaled,
        _ => f64::NAN,
    };
    let fit_exponent = log_log_slope(&valid);

    let (expected_limit, candidates) = limit_constants(barrier, order, is_interval)?;
    Ok(SweepReport {
        rows,
        scaling,
        extrapolated_limit,
        extrapolation_order,
        fit_exponent,
        expected_limit,
        candidates,
    })
}

fn log_log_slope(rows: &[&SweepRow]) -> f64 {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.raw != 0.0)
        .map(|r| (r.rho.ln(), r.raw.abs().ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

fn limit_constants(
    barrier: &Barrier,
    order: FractionalOrder,
    is_interval: bool,
) -> Result<(Option<f64>, Vec<LimitCandidate>)> {
    // w₁ at α = 1/2: V_* contributes only O(1), so −c_α(1/4) remains
    let (tau, sign) = match barrier.kind {
        BarrierKind::Power(tau) => (tau, 1.0),
        BarrierKind::W1 if order.is_half => (W1_TAU, -1.0),
        _ => return Ok((None, Vec::new())),
    };
    if is_interval {
        return Ok((Some(sign * c_alpha(order, tau)?), Vec::new()));
    }
    let n = barrier.domain.dim();
    let dg = sign * d_alpha(n, order)? * gamma_constant(order, tau)?;
    let candidates = vec![
        LimitCandidate {
            label: format!("c_{{{n},alpha}} d_alpha gamma"),
            value: normalization_c(n, order)? * dg,
        },
        LimitCandidate {
            label: "c_{1,alpha} d_alpha gamma".to_string(),
            value: normalization_c(1, order)? * dg,
        },
    ];
    Ok((None, candidates))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Sign {
    Positive,
    Negative,
    /// No sign is predicted.
    Indefinite,
}

/// Which of the three boundary behaviours of `(−Δ)^α V_τ` applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierCase {
    /// `op ≍ ρ^{τ−2α}`, positive.
    Supersolution,
    /// `−op ≍ ρ^{τ−2α}`.
    Subsolution,
    /// `τ = 2α − 1`, `α ≠ 1/2`: `|op| ≤ c(ρ^{2α−1}·ρ^{τ−2α} + ρ^τ + 1)`.
    Critical,
    /// `τ = 0`, a constant in the layer.
    Flat,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpectedBehavior {
    pub case: BarrierCase,
    pub sign: Sign,
    /// `τ − 2α` for the two blow-up cases.
    pub blowup_exponent: Option<f64>,
}

/// Expected sign and blow-up rate of `(−Δ)^α V_τ` near the boundary.
pub fn case_classifier(order: FractionalOrder, tau: f64) -> Result<ExpectedBehavior> {
    let regime = ExponentRegime::classify(order, tau)?.regime;
    let blowup = Some(tau - 2.0 * order.alpha);
    Ok(match regime {
        Regime::PositiveBlowup => ExpectedBehavior {
            case: BarrierCase::Supersolution,
            sign: Sign::Positive,
            blowup_exponent: blowup,
        },
        Regime::NegativeBlowup => ExpectedBehavior {
            case: BarrierCase::Subsolution,
            sign: Sign::Negative,
            blowup_exponent: blowup,
        },
        Regime::Critical => ExpectedBehavior {
            case: BarrierCase::Critical,
            sign: Sign::Indefinite,
            blowup_exponent: None,
        },
        Regime::Zero | Regime::Log => ExpectedBehavior {
            case: BarrierCase::Flat,
            sign: Sign::Indefinite,
            blowup_exponent: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_values() {
        let d = Domain::unit_interval();
        let v = make_barrier(BarrierKind::Power(-0.25), 0.1, &d).unwrap();
        assert!((v.value(&[0.05]) - 2.114743).abs() < 1e-6);
        assert!((v.value(&[0.95]) - 2.114743).abs() < 1e-6);
        let l = make_barrier(BarrierKind::Log, 0.1, &d).unwrap();
        assert!((l.value(&[0.05]) - 2.995732).abs() < 1e-6);
    }

    #[test]
    fn join_has_flat_top() {
        let d = Domain::unit_interval();
        for kind in [BarrierKind::Power(-0.5), BarrierKind::Log, BarrierKind::W1] {
            let b = make_barrier(kind, 0.1, &d).unwrap();
            assert!(b.profile_slope(0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_delta_rejected() {
        let d = Domain::unit_interval();
        for delta in [0.0, -0.1, 0.25, 0.4] {
            assert!(matches!(
                make_barrier(BarrierKind::Log, delta, &d),
                Err(Error::Domain(_))
            ));
        }
        assert!(make_barrier(BarrierKind::Power(-1.0), 0.1, &d).is_err());
    }

    #[test]
    fn remainder_matches_direct_difference() {
        let d = Domain::unit_interval();
        for kind in [BarrierKind::Power(-0.3), BarrierKind::Power(1.2), BarrierKind::W1] {
            let b = make_barrier(kind, 0.1, &d).unwrap();
            for &(t, e) in &[(0.05, 0.03), (0.05, 0.08), (0.12, -0.04), (0.3, 0.1), (0.09, 0.005)] {
                let direct = b.profile(t + e) - b.profile(t) - b.profile_slope(t) * e;
                let r = b.profile.remainder(t, e);
                assert!((r - direct).abs() < 1e-12 * (1.0 + direct.abs()), "{kind:?} {t} {e}");
            }
        }
    }
}
