//! Named constants of the regional operator: the normalisation `c_{N,α}`,
//! the one-dimensional constant `γ(α,τ)`, `c_α(τ) = c_{1,α}·γ(α,τ)`,
//! `d_α`, and the killing density `κ_α`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};
use crate::geometry::Domain;
use crate::quadrature::{
    integrate_adaptive, integrate_graded, integrate_tail, sum_of_parts, IntegralResult,
    QuadratureSpec,
};
use statrs::function::gamma::gamma;

/// Largest order for which `c_{N,α}` is returned; `Γ(1−α)` has a pole at 1.
pub const MAX_ALPHA: f64 = 0.999;

/// Tolerance for recognising `τ = 2α − 1`.
pub const CRITICAL_TAU_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalOrder {
    pub alpha: f64,
    pub is_half: bool,
}

impl FractionalOrder {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return domain_err(format!("fractional order must lie in (0, 1) (got {alpha})"));
        }
        Ok(FractionalOrder {
            alpha,
            is_half: (alpha - 0.5).abs() <= 2.0 * f64::EPSILON,
        })
    }

    pub fn half() -> Self {
        FractionalOrder {
            alpha: 0.5,
            is_half: true,
        }
    }

    /// `2α − 1`, the second zero of `γ(α, ·)`.
    pub fn critical_tau(&self) -> f64 {
        2.0 * self.alpha - 1.0
    }

    pub fn check_tau(&self, tau: f64) -> Result<()> {
        if tau > -1.0 && tau < 2.0 * self.alpha {
            Ok(())
        } else {
            domain_err(format!(
                "exponent tau = {tau} outside (-1, {})",
                2.0 * self.alpha
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Regime {
    PositiveBlowup,
    NegativeBlowup,
    Critical,
    Zero,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentRegime {
    pub tau: f64,
    pub regime: Regime,
}

impl ExponentRegime {
    /// Classifies `τ ∈ (−1, 2α)` by the sign of `τ(2α − 1 − τ)`.
    pub fn classify(order: FractionalOrder, tau: f64) -> Result<Self> {
        order.check_tau(tau)?;
        let regime = if tau == 0.0 {
            if order.is_half {
                Regime::Log
            } else {
                Regime::Zero
            }
        } else if (tau - order.critical_tau()).abs() <= CRITICAL_TAU_TOL {
            Regime::Critical
        } else if tau * (order.critical_tau() - tau) > 0.0 {
            Regime::PositiveBlowup
        } else {
            Regime::NegativeBlowup
        };
        Ok(ExponentRegime { tau, regime })
    }
}

/// Surface area of the unit sphere `S^{k−1}` in `ℝ^k`.
pub fn sphere_area(k: usize) -> f64 {
    let h = 0.5 * k as f64;
    2.0 * PI.powf(h) / gamma(h)
}

/// `c_{N,α} = 2^{2α} α Γ((N+2α)/2) / (π^{N/2} Γ(1−α))`, the constant for
/// which the full-space operator has Fourier symbol `|ξ|^{2α}`.
pub fn normalization_c(n: usize, order: FractionalOrder) -> Result<f64> {
    if n == 0 {
        return domain_err("dimension must be at least 1");
    }
    let a = order.alpha;
    if a > MAX_ALPHA {
        return domain_err(format!("c_(N,alpha) diverges as alpha -> 1; alpha = {a} > {MAX_ALPHA}"));
    }
    let nf = n as f64;
    Ok(4f64.powf(a) * a * gamma(0.5 * (nf + 2.0 * a)) / (PI.powf(0.5 * nf) * gamma(1.0 - a)))
}

pub(crate) fn constants_spec() -> QuadratureSpec {
    QuadratureSpec {
        max_subdivisions: 4000,
        ..QuadratureSpec::with_tolerances(1e-13, 1e-12)
    }
}

fn require(r: IntegralResult) -> Result<f64> {
    if r.converged {
        Ok(r.value)
    } else {
        Err(Error::NonConverged {
            value: r.value,
            error: r.error_estimate,
        })
    }
}

/// `γ(α,τ) = ∫₀¹ (1−s^τ)(1−s^{2α−1−τ}) (1−s)^{−1−2α} ds` with the default
/// tight tolerances.
pub fn gamma_constant(order: FractionalOrder, tau: f64) -> Result<f64> {
    require(gamma_constant_with(order, tau, &constants_spec())?)
}

/// `γ(α,τ)` with an explicit quadrature spec.
///
/// The range is split at `s = 1/2`; the lower half is integrated in `s`,
/// the upper half in `v = 1 − s`, so both factors `1 − s^p` are formed with
/// `expm1`/`ln_1p` and never lose digits.
pub fn gamma_constant_with(
    order: FractionalOrder,
    tau: f64,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    order.check_tau(tau)?;
    let a = order.alpha;
    let other = order.critical_tau() - tau;
    if tau == 0.0 || other == 0.0 {
        return Ok(IntegralResult::ZERO);
    }
    let near_zero = |s: f64| {
        let l = s.ln();
        (tau * l).exp_m1() * (other * l).exp_m1() * (-(1.0 + 2.0 * a) * (-s).ln_1p()).exp()
    };
    let near_one = |v: f64| {
        let l = (-v).ln_1p();
        // grouped so that no factor overflows as v -> 0
        ((tau * l).exp_m1() / v) * ((other * l).exp_m1() / v) * v.powf(1.0 - 2.0 * a)
    };
    let zero_exp = tau.min(0.0) + other.min(0.0);
    let one_exp = 1.0 - 2.0 * a;
    sum_of_parts(spec, |part| {
        Ok(vec![
            integrate_graded(near_zero, 0.0, 0.5, Some(zero_exp), None, part)?,
            integrate_graded(near_one, 0.0, 0.5, Some(one_exp), None, part)?,
        ])
    })
}

/// `c_α(τ) = c_{1,α} γ(α,τ)`, the half-line power coefficient.
pub fn c_alpha(order: FractionalOrder, tau: f64) -> Result<f64> {
    Ok(normalization_c(1, order)? * gamma_constant(order, tau)?)
}

/// `d_α = ∫_{ℝ^{N−1}} (1+|z|²)^{−(N+2α)/2} dz = π^{(N−1)/2} Γ(α+½) / Γ(N/2+α)`.
pub fn d_alpha(n: usize, order: FractionalOrder) -> Result<f64> {
    if n < 2 {
        return domain_err("d_alpha needs N >= 2");
    }
    let a = order.alpha;
    let nf = n as f64;
    Ok(PI.powf(0.5 * (nf - 1.0)) * gamma(a + 0.5) / gamma(0.5 * nf + a))
}

/// Radial quadrature of the defining integral of `d_α`.
pub fn d_alpha_quadrature(
    n: usize,
    order: FractionalOrder,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    if n < 2 {
        return domain_err("d_alpha needs N >= 2");
    }
    let p = 0.5 * (n as f64 + 2.0 * order.alpha);
    let k = (n - 2) as i32;
    let f = |r: f64| r.powi(k) * (1.0 + r * r).powf(-p);
    let area = sphere_area(n - 1);
    let r = sum_of_parts(spec, |part| {
        Ok(vec![
            integrate_adaptive(f, 0.0, 1.0, part)?,
            integrate_tail(f, 1.0, 2.0 * p - k as f64, part)?,
        ])
    })?;
    Ok(r.scale(area))
}

/// `κ_α(x) = c_{1,α}((x−a)^{−2α} + (b−x)^{−2α}) / (2α)` on `(a, b)`.
pub fn kappa_interval(x: f64, a: f64, b: f64, order: FractionalOrder) -> Result<f64> {
    if !(a < x && x < b) {
        return domain_err(format!("x = {x} not inside ({a}, {b})"));
    }
    let t = 2.0 * order.alpha;
    Ok(normalization_c(1, order)? * ((x - a).powf(-t) + (b - x).powf(-t)) / t)
}

/// Direct quadrature of the two exterior tails `c_{1,α}∫|x−z|^{−1−2α}dz`.
pub fn kappa_interval_quadrature(
    x: f64,
    a: f64,
    b: f64,
    order: FractionalOrder,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    if !(a < x && x < b) {
        return domain_err(format!("x = {x} not inside ({a}, {b})"));
    }
    let decay = 1.0 + 2.0 * order.alpha;
    let f = |s: f64| s.powf(-decay);
    let c = normalization_c(1, order)?;
    let r = sum_of_parts(spec, |part| {
        Ok(vec![
            integrate_tail(f, x - a, decay, part)?,
            integrate_tail(f, b - x, decay, part)?,
        ])
    })?;
    Ok(r.scale(c))
}

/// `κ_α(x) = (c_{N,α}/(2α)) ∫_{S^{N−1}} r(ω)^{−2α} dω` inside a ball, with
/// the default tight tolerances.
pub fn kappa_ball(x: &[f64], ball: &Domain, order: FractionalOrder) -> Result<f64> {
    require(kappa_ball_with(x, ball, order, &constants_spec())?)
}

/// `κ_α` inside a ball with an explicit quadrature spec.
///
/// By rotational symmetry about the axis through the centre and `x` the
/// sphere integral reduces to one polar angle `θ` measured from the
/// outward direction, where `r(θ) = √(q + d²cos²θ) − d cos θ`,
/// `q = R² − d²`.
pub fn kappa_ball_with(
    x: &[f64],
    ball: &Domain,
    order: FractionalOrder,
    spec: &QuadratureSpec,
) -> Result<IntegralResult> {
    let Domain::Ball { center, radius } = ball else {
        return domain_err("kappa_ball needs a ball domain");
    };
    let rho = ball.boundary_distance(x)?;
    let n = center.len();
    let t = 2.0 * order.alpha;
    let pref = normalization_c(n, order)? / t;
    let d = radius - rho;
    if d == 0.0 {
        return Ok(IntegralResult {
            value: pref * sphere_area(n) * radius.powf(-t),
            ..IntegralResult::ZERO
        });
    }
    let q = rho * (radius + d);
    let exit = |theta: f64| {
        let p = d * theta.cos();
        let disc = (q + p * p).sqrt();
        if p >= 0.0 {
            q / (p + disc)
        } else {
            disc - p
        }
    };
    let (weight, measure): (fn(f64) -> f64, f64) = match n {
        2 => (|_| 1.0, 2.0),
        3 => (f64::sin, 2.0 * PI),
        _ => return Err(Error::Unsupported(format!("ball dimension {n}"))),
    };
    let f = |theta: f64| weight(theta) * exit(theta).powf(-t);
    // the profile changes scale near θ = π/2 where the ray grazes
    let r = sum_of_parts(spec, |part| {
        Ok(vec![
            integrate_adaptive(f, 0.0, 0.5 * PI, part)?,
            integrate_adaptive(f, 0.5 * PI, PI, part)?,
        ])
    })?;
    Ok(r.scale(pref * measure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn order(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn order_validation() {
        assert!(FractionalOrder::new(0.0).is_err());
        assert!(FractionalOrder::new(1.0).is_err());
        assert!(order(0.5).is_half);
        assert!(!order(0.4999).is_half);
    }

    #[test]
    fn normalization_examples() {
        assert!(rel(normalization_c(1, order(0.5)).unwrap(), 1.0 / PI) < 1e-14);
        assert!(normalization_c(1, order(0.9995)).is_err());
        assert!(normalization_c(1, order(0.999)).unwrap().is_finite());
    }

    // 1/c_{2,α} = ∫_{ℝ²}(1 − cos ζ₁)|ζ|^{−2−2α}dζ = d_α · 2∫₀^∞ (1 − cos t) t^{−1−2α} dt.
    // The oscillatory tail is summed over half periods with repeated averaging.
    #[test]
    fn normalization_matches_defining_integral_in_plane() {
        let a = 0.25;
        let spec = QuadratureSpec::with_tolerances(1e-13, 1e-12);
        let head = integrate_graded(
            |t: f64| (1.0 - t.cos()) * t.powf(-1.0 - 2.0 * a),
            0.0,
            PI,
            Some(1.0 - 2.0 * a),
            None,
            &spec,
        )
        .unwrap()
        .value;
        let plain_tail = PI.powf(-2.0 * a) / (2.0 * a);
        let mut partial = Vec::new();
        let mut acc = 0.0;
        for k in 1..=40 {
            let lo = k as f64 * PI;
            acc += integrate_adaptive(
                |t: f64| t.cos() * t.powf(-1.0 - 2.0 * a),
                lo,
                lo + PI,
                &spec,
            )
            .unwrap()
            .value;
            partial.push(acc);
        }
        for _ in 0..20 {
            partial = partial.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        }
        let cos_tail = *partial.last().unwrap();
        let integral = 2.0 * d_alpha(2, order(a)).unwrap() * (head + plain_tail - cos_tail);
        assert!(rel(1.0 / integral, normalization_c(2, order(a)).unwrap()) < 1e-6);
    }

    #[test]
    fn gamma_zeros() {
        assert!(gamma_constant(order(0.25), 0.0).unwrap().abs() <= 1e-10);
        assert!(gamma_constant(order(0.75), 0.5).unwrap().abs() <= 1e-10);
        assert!(gamma_constant(order(0.3), 1.0).is_err());
        assert!(gamma_constant(order(0.3), -1.0).is_err());
    }

    // fixed 2^20-panel midpoint rule on the graded transform of each half
    fn gamma_oracle(a: f64, tau: f64) -> f64 {
        let other = 2.0 * a - 1.0 - tau;
        let panels = 1 << 20;
        let h = 1.0 / panels as f64;
        let m = 8i32;
        let mut sum = 0.0;
        for i in 0..panels {
            let u = (i as f64 + 0.5) * h;
            let d = 0.5 * u.powi(m);
            let jac = 0.5 * m as f64 * u.powi(m - 1);
            let s = d;
            let lo = (1.0 - s.powf(tau)) * (1.0 - s.powf(other)) * (1.0 - s).powf(-1.0 - 2.0 * a);
            let v = d;
            let sv = 1.0 - v;
            let hi = (1.0 - sv.powf(tau)) * (1.0 - sv.powf(other)) * v.powf(-1.0 - 2.0 * a);
            sum += (lo + hi) * jac;
        }
        sum * h
    }

    #[test]
    fn gamma_matches_midpoint_oracle() {
        for &(a, tau) in &[(0.25, -0.25), (0.75, 0.3), (0.6, -0.5)] {
            let g = gamma_constant(order(a), tau).unwrap();
            let o = gamma_oracle(a, tau);
            assert!(rel(g, o) < 1e-8, "alpha {a} tau {tau}: {g} vs {o}");
        }
        assert!(gamma_constant(order(0.25), -0.25).unwrap() > 0.0);
    }

    #[test]
    fn c_alpha_signs() {
        assert!(c_alpha(order(0.3), -0.2).unwrap() > 0.0);
        assert!(c_alpha(order(0.8), 0.9).unwrap() < 0.0);
        assert_eq!(c_alpha(order(0.5), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn regime_classification() {
        let r = |a: f64, t: f64| ExponentRegime::classify(order(a), t).unwrap().regime;
        assert_eq!(r(0.3, -0.2), Regime::PositiveBlowup);
        assert_eq!(r(0.8, 0.9), Regime::NegativeBlowup);
        assert_eq!(r(0.3, 2.0 * 0.3 - 1.0), Regime::Critical);
        assert_eq!(r(0.3, 0.0), Regime::Zero);
        assert_eq!(r(0.5, 0.0), Regime::Log);
        assert!(ExponentRegime::classify(order(0.3), 0.6).is_err());
    }

    #[test]
    fn sign_table_and_symmetry_on_grid() {
        for i in 1..=9 {
            let a = 0.1 * i as f64;
            let o = order(a);
            for j in 1..=9 {
                let tau = -1.0 + (2.0 * a + 1.0) * j as f64 / 10.0;
                let g = gamma_constant(o, tau).unwrap();
                let mirror = gamma_constant(o, 2.0 * a - 1.0 - tau).unwrap();
                assert!((g - mirror).abs() <= 1e-9, "alpha {a} tau {tau}: {g} vs {mirror}");
                let p = tau * (2.0 * a - 1.0 - tau);
                if p.abs() > 1e-3 {
                    assert_eq!(g.signum(), p.signum(), "alpha {a} tau {tau}");
                }
            }
        }
    }

    #[test]
    fn d_alpha_closed_forms() {
        assert!((d_alpha(2, order(0.5)).unwrap() - 2.0).abs() <= 1e-10);
        assert!(rel(d_alpha(3, order(0.5)).unwrap(), PI) < 1e-14);
        let spec = constants_spec();
        for n in [2, 3] {
            for a in [0.25, 0.5, 0.75] {
                let q = d_alpha_quadrature(n, order(a), &spec).unwrap();
                assert!(q.converged);
                assert!(rel(q.value, d_alpha(n, order(a)).unwrap()) <= 1e-8, "N {n} alpha {a}");
            }
        }
    }

    #[test]
    fn kappa_interval_examples() {
        let k = kappa_interval(0.5, 0.0, 1.0, order(0.5)).unwrap();
        assert!(rel(k, 4.0 / PI) < 1e-14);
        assert!(kappa_interval(1.0, 0.0, 1.0, order(0.5)).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = constants_spec();
        for _ in 0..20 {
            let x: f64 = rng.gen_range(0.01..0.99);
            let a: f64 = rng.gen_range(0.05..0.95);
            let closed = kappa_interval(x, 0.0, 1.0, order(a)).unwrap();
            let quad = kappa_interval_quadrature(x, 0.0, 1.0, order(a), &spec).unwrap();
            assert!(rel(quad.value, closed) <= 1e-8, "x {x} alpha {a}");
            let mirror = kappa_interval(1.0 - x, 0.0, 1.0, order(a)).unwrap();
            assert!(rel(mirror, closed) < 1e-12);
        }
    }

    // derivative of the closed form is bounded by c·ρ^{−1−2α} on each side
    #[test]
    fn kappa_interval_locally_lipschitz() {
        let o = order(0.4);
        let c = normalization_c(1, o).unwrap();
        let bound = 2.0 * c * 0.1f64.powf(-1.0 - 0.8);
        let mut x = 0.1;
        while x < 0.9 {
            let y = x + 0.013;
            let dk = (kappa_interval(x, 0.0, 1.0, o).unwrap()
                - kappa_interval(y.min(0.9), 0.0, 1.0, o).unwrap())
            .abs();
            assert!(dk <= bound * (y.min(0.9) - x) + 1e-12);
            x = y;
        }
    }

    #[test]
    fn kappa_ball_center_and_radial_monotonicity() {
        let disk = Domain::unit_disk();
        for a in [0.25, 0.5, 0.75] {
            let o = order(a);
            let k = kappa_ball(&[0.0, 0.0], &disk, o).unwrap();
            let expect = normalization_c(2, o).unwrap() / (2.0 * a) * 2.0 * PI;
            assert!(rel(k, expect) < 1e-13);
            let off = kappa_ball(&[1e-9, 0.0], &disk, o).unwrap();
            assert!(rel(off, expect) < 1e-7);
            let mut prev = k;
            for i in 1..40 {
                let r = i as f64 / 40.0;
                let v = kappa_ball(&[0.0, r], &disk, o).unwrap();
                assert!(v > prev, "alpha {a} r {r}");
                prev = v;
            }
        }
        let ball = Domain::ball(vec![0.0; 3], 2.0).unwrap();
        let o = order(0.3);
        let k = kappa_ball(&[0.0, 0.0, 0.0], &ball, o).unwrap();
        let off = kappa_ball(&[1e-6, 0.0, 0.0], &ball, o).unwrap();
        assert!(rel(off, k) < 1e-6);
    }

    // at α = 1/2 on the disk the boundary limit of κρ^{2α} is d_α c_{2,α}/(2α)
    #[test]
    fn kappa_disk_boundary_limit() {
        let disk = Domain::unit_disk();
        for a in [0.3, 0.5, 0.7] {
            let o = order(a);
            let limit = d_alpha(2, o).unwrap() * normalization_c(2, o).unwrap() / (2.0 * a);
            let rho = [1e-3, 5e-4];
            let v: Vec<f64> = rho
                .iter()
                .map(|r| kappa_ball(&[1.0 - r, 0.0], &disk, o).unwrap() * r.powf(2.0 * a))
                .collect();
            let ext = crate::quadrature::richardson(rho[0], v[0], rho[1], v[1], (2.0 * a).min(1.0));
            assert!(rel(ext, limit) < 1e-3, "alpha {a}: {ext} vs {limit}");
        }
    }

    proptest! {
        #[test]
        fn gamma_sign_matches_table(a in 0.05f64..0.95, u in 0.01f64..0.99) {
            let tau = -1.0 + (2.0 * a + 1.0) * u;
            let p = tau * (2.0 * a - 1.0 - tau);
            prop_assume!(p.abs() > 1e-3);
            let g = gamma_constant(order(a), tau).unwrap();
            prop_assert_eq!(g.signum(), p.signum());
        }
    }
}
