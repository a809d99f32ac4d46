use std::f64::consts::PI;

use censorlap::constants::{c_alpha, kappa_interval, normalization_c, FractionalOrder};
use censorlap::geometry::Domain;
use censorlap::operator::{
    halfline_log, halfline_power, regional_apply, regional_apply_disk, regional_apply_with_radius,
    Affine, Combination, Constant, FnField, Polynomial1d, ScalarField,
};
use censorlap::quadrature::{richardson, QuadratureSpec};
use censorlap::Error;
use proptest::prelude::*;

fn order(a: f64) -> FractionalOrder {
    FractionalOrder::new(a).unwrap()
}

fn spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

// Closed form for polynomials: with t = z − x,
// u(x) − u(z) = −Σ_j u^{(j)}(x)/j! t^j and
// p.v.∫_{−L}^{R} t^j |t|^{−1−2α} dt = (R^{j−2α} + (−1)^j L^{j−2α})/(j − 2α).
fn polynomial_oracle(coeffs: &[f64], x: f64, a: f64, b: f64, alpha: f64) -> f64 {
    let n = coeffs.len();
    let mut taylor = coeffs.to_vec();
    for k in 0..n {
        for j in (k..n - 1).rev() {
            taylor[j] += x * taylor[j + 1];
        }
    }
    let (l, r) = (x - a, b - x);
    let a2 = 2.0 * alpha;
    let mut total = 0.0;
    for (j, c) in taylor.iter().enumerate().skip(1) {
        let jf = j as f64;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let moment = if (jf - a2).abs() < 1e-15 {
            (r / l).ln()
        } else {
            (r.powf(jf - a2) + sign * l.powf(jf - a2)) / (jf - a2)
        };
        total -= c * moment;
    }
    normalization_c(1, order(alpha)).unwrap() * total
}

// trapezoid on the excised interval with dyadic ε and Richardson in ε^{2−2α}
fn brute_square_at_half(alpha: f64) -> f64 {
    let x = 0.5;
    let a2 = 2.0 * alpha;
    let excised = |eps: f64| {
        let n = 200_000;
        let h = (x - eps) / n as f64;
        let f = |t: f64| -t * t * t.powf(-1.0 - a2);
        let mut s = 0.5 * (f(eps) + f(x));
        for k in 1..n {
            s += f(eps + k as f64 * h);
        }
        2.0 * s * h
    };
    let e1 = 1e-3;
    let e2 = 5e-4;
    let v = richardson(e1, excised(e1), e2, excised(e2), 2.0 - a2);
    normalization_c(1, order(alpha)).unwrap() * v
}

#[test]
fn halfline_power_examples() {
    for a in [0.25, 0.5, 0.75] {
        let v = halfline_power(order(a), 2.0 * a - 1.0, 1.0).unwrap();
        assert!(v.abs() < 1e-9, "alpha {a}: {v}");
    }
    let o = order(0.25);
    let v = halfline_power(o, -0.25, 2.0).unwrap();
    let expect = c_alpha(o, -0.25).unwrap() * 2f64.powf(-0.75);
    assert!(rel(v, expect) < 1e-6, "{v} vs {expect}");
    assert!(halfline_power(o, -0.25, 0.0).is_err());
    assert!(halfline_power(o, 0.6, 1.0).is_err());
}

#[test]
fn halfline_power_homogeneity() {
    for &(a, tau) in &[(0.25, -0.25), (0.75, 0.4), (0.6, -0.7)] {
        let o = order(a);
        let ts = [0.5, 1.0, 2.0, 4.0];
        let scaled: Vec<f64> = ts
            .iter()
            .map(|&t| halfline_power(o, tau, t).unwrap() * t.powf(2.0 * a - tau))
            .collect();
        let c = c_alpha(o, tau).unwrap();
        for s in &scaled {
            assert!(rel(*s, scaled[0]) <= 1e-6);
            assert!(rel(*s, c) <= 1e-6, "alpha {a} tau {tau}: {s} vs {c}");
        }
    }
}

#[test]
fn halfline_log_vanishes_at_half() {
    for t in [0.1, 0.7, 1.0, 10.0] {
        let v = halfline_log(order(0.5), t).unwrap();
        assert!(v.abs() <= 1e-6, "t {t}: {v}");
    }
}

// dense excised midpoint rule with Richardson in ε^{2−2α}
#[test]
fn halfline_log_matches_excised_oracle() {
    let alpha = 0.3;
    let a2 = 2.0 * alpha;
    let t = 1.0;
    let f = |y: f64| y.ln() * (t - y).abs().powf(-1.0 - a2);
    let midpoint = |lo: f64, hi: f64, n: usize| {
        let h = (hi - lo) / n as f64;
        (0..n).map(|k| f(lo + (k as f64 + 0.5) * h)).sum::<f64>() * h
    };
    // ∫₀^{1/2}: substitute y = w^4 to tame the logarithm
    let head = {
        let n = 400_000;
        let top = 0.5f64.powf(0.25);
        let h = top / n as f64;
        (0..n)
            .map(|k| {
                let w = (k as f64 + 0.5) * h;
                f(w.powi(4)) * 4.0 * w.powi(3)
            })
            .sum::<f64>()
            * h
    };
    // tail beyond 3/2 via y = 1.5/w^5
    let tail = {
        let n = 400_000;
        let h = 1.0 / n as f64;
        (0..n)
            .map(|k| {
                let w = (k as f64 + 0.5) * h;
                let y = 1.5 * w.powi(-5);
                f(y) * 7.5 * w.powi(-6)
            })
            .sum::<f64>()
            * h
    };
    let excised = |eps: f64| midpoint(0.5, t - eps, 400_000) + midpoint(t + eps, 1.5, 400_000);
    let e1 = 2e-3;
    let e2 = 1e-3;
    let mid = richardson(e1, excised(e1), e2, excised(e2), 2.0 - a2);
    let oracle = normalization_c(1, order(alpha)).unwrap() * (head + mid + tail);
    let v = halfline_log(order(alpha), t).unwrap();
    assert!(v.abs() > 1e-3);
    assert!(rel(v, oracle) < 1e-4, "{v} vs {oracle}");
}

#[test]
fn constants_and_odd_fields_vanish() {
    let iv = Domain::unit_interval();
    for a in [0.2, 0.5, 0.8] {
        let s = regional_apply(&Constant(3.0), &[0.3], &iv, order(a), &spec()).unwrap();
        assert!(s.value.abs() <= 1e-9);
        let lin = Polynomial1d::new(vec![0.0, 1.0]);
        let s = regional_apply(&lin, &[0.5], &iv, order(a), &spec()).unwrap();
        assert!(s.value.abs() <= 1e-8, "alpha {a}: {}", s.value);
    }
}

#[test]
fn square_at_midpoint_matches_brute_force() {
    let iv = Domain::unit_interval();
    let sq = Polynomial1d::new(vec![0.0, 0.0, 1.0]);
    let v = regional_apply(&sq, &[0.5], &iv, order(0.3), &spec()).unwrap();
    let brute = brute_square_at_half(0.3);
    let closed = polynomial_oracle(&[0.0, 0.0, 1.0], 0.5, 0.0, 1.0, 0.3);
    assert!(rel(v.value, closed) < 1e-8);
    assert!(rel(v.value, brute) < 1e-5, "{} vs {brute}", v.value);
}

#[test]
fn polynomials_match_closed_form() {
    let iv = Domain::interval(-0.5, 1.5).unwrap();
    let coeffs = [0.3, -1.0, 2.0, 0.7, -0.4];
    let p = Polynomial1d::new(coeffs.to_vec());
    for a in [0.1, 0.3, 0.5, 0.75, 0.95] {
        for x in [-0.45, 0.1, 0.5, 1.3, 1.49] {
            let v = regional_apply(&p, &[x], &iv, order(a), &spec()).unwrap();
            let o = polynomial_oracle(&coeffs, x, -0.5, 1.5, a);
            assert!(
                (v.value - o).abs() <= 1e-8 * o.abs().max(1.0),
                "alpha {a} x {x}: {} vs {o}",
                v.value
            );
            assert!(v.excision_radius_used < (x + 0.5f64).min(1.5 - x));
        }
    }
}

#[test]
fn excision_radius_must_fit() {
    let iv = Domain::unit_interval();
    let p = Polynomial1d::new(vec![0.0, 0.0, 1.0]);
    let e = regional_apply_with_radius(&p, &[0.2], &iv, order(0.4), &spec(), 0.25);
    assert!(matches!(e, Err(Error::ExcisionTooLarge { .. })));
    let e = regional_apply_with_radius(&p, &[0.2], &iv, order(0.4), &spec(), 0.0);
    assert!(matches!(e, Err(Error::ExcisionTooLarge { .. })));
    assert!(regional_apply(&p, &[1.2], &iv, order(0.4), &spec()).is_err());
}

// The exterior of (0,1) seen from a field supported in (0.2, 0.8) differs
// from the exterior of (−2, 3) exactly by κ: both must give the same
// full-space value.
#[test]
fn full_space_value_is_independent_of_the_window() {
    let bump = FnField {
        f: |z: &[f64]| {
            let t = (z[0] - 0.5) / 0.3;
            if t.abs() < 1.0 {
                (1.0 - t * t).powi(3)
            } else {
                0.0
            }
        },
        hessian_bound: None,
    };
    for a in [0.3, 0.7] {
        let o = order(a);
        let x = 0.45;
        let small = regional_apply(&bump, &[x], &Domain::unit_interval(), o, &spec()).unwrap();
        let big_domain = Domain::interval(-2.0, 3.0).unwrap();
        let big = regional_apply(&bump, &[x], &big_domain, o, &spec()).unwrap();
        let u = bump.value(&[x]);
        let full_small = small.value + u * kappa_interval(x, 0.0, 1.0, o).unwrap();
        let full_big = big.value + u * kappa_interval(x, -2.0, 3.0, o).unwrap();
        assert!(rel(full_small, full_big) < 1e-7, "alpha {a}: {full_small} vs {full_big}");
    }
}

// (−Δ)^α e^{−x²} at 0 equals 2^{2α}Γ(α+1/2)/√π for the |ξ|^{2α} symbol; this
// pins the normalisation of the kernel.
#[test]
fn gaussian_matches_fourier_symbol() {
    let gauss = FnField::new(|z: &[f64]| (-z[0] * z[0]).exp());
    for a in [0.25, 0.5, 0.8] {
        let o = order(a);
        let l = 12.0;
        let d = Domain::interval(-l, l).unwrap();
        let v = regional_apply(&gauss, &[0.0], &d, o, &spec()).unwrap().value
            + kappa_interval(0.0, -l, l, o).unwrap();
        let expect = 4f64.powf(a) * statrs::function::gamma::gamma(a + 0.5) / PI.sqrt();
        assert!(rel(v, expect) < 1e-7, "alpha {a}: {v} vs {expect}");
    }
}

#[test]
fn two_near_radii_agree() {
    let iv = Domain::unit_interval();
    let f = FnField {
        f: |z: &[f64]| (3.0 * z[0]).sin() + z[0] * z[0] * z[0],
        hessian_bound: Some(9.0 + 6.0),
    };
    for a in [0.3, 0.6, 0.9] {
        let x = [0.37];
        let v1 = regional_apply_with_radius(&f, &x, &iv, order(a), &spec(), 0.3).unwrap();
        let v2 = regional_apply_with_radius(&f, &x, &iv, order(a), &spec(), 0.05).unwrap();
        let tol = 2.0 * (v1.error_estimate + v2.error_estimate) + 1e-9;
        assert!((v1.value - v2.value).abs() <= tol, "alpha {a}: {} vs {}", v1.value, v2.value);
    }
}

#[test]
fn disk_constant_and_linear() {
    let disk = Domain::unit_disk();
    let o = order(0.4);
    let s = regional_apply_disk(&Constant(2.0), &[0.2, -0.3], &disk, o, &spec()).unwrap();
    assert!(s.value.abs() < 1e-9);
    let lin = Affine {
        offset: 1.0,
        gradient: vec![0.7, -1.3],
    };
    let s = regional_apply_disk(&lin, &[0.0, 0.0], &disk, order(0.7), &spec()).unwrap();
    assert!(s.value.abs() < 1e-8);
    assert!(regional_apply_disk(&lin, &[0.0], &Domain::unit_interval(), o, &spec()).is_err());
}

// polar oracle for z₁² at x = (x₁, x₂) and α < 1/2: the inner radial
// integrals close in r(θ); the angular integral is a dense trapezoid rule.
#[test]
fn disk_quadratic_matches_polar_oracle() {
    let disk = Domain::unit_disk();
    let alpha = 0.3;
    let a2 = 2.0 * alpha;
    let x = [0.3, 0.1];
    let field = FnField {
        f: |z: &[f64]| z[0] * z[0],
        hessian_bound: Some(2.0),
    };
    let v = regional_apply_disk(&field, &x, &disk, order(alpha), &spec()).unwrap();
    let n = 20_000;
    let mut acc = 0.0;
    for k in 0..n {
        let th = 2.0 * PI * k as f64 / n as f64;
        let w = [th.cos(), th.sin()];
        let r = disk.ray_exit_distance(&x, &w).unwrap();
        acc += -2.0 * x[0] * w[0] * r.powf(1.0 - a2) / (1.0 - a2)
            - w[0] * w[0] * r.powf(2.0 - a2) / (2.0 - a2);
    }
    let oracle = normalization_c(2, order(alpha)).unwrap() * acc * 2.0 * PI / n as f64;
    assert!(rel(v.value, oracle) < 1e-7, "{} vs {oracle}", v.value);
    // |z|² at the centre: −2π c/(2 − 2α)
    let r2 = FnField {
        f: |z: &[f64]| z[0] * z[0] + z[1] * z[1],
        hessian_bound: Some(2.0),
    };
    let v = regional_apply_disk(&r2, &[0.0, 0.0], &disk, order(0.6), &spec()).unwrap();
    let expect = -2.0 * PI * normalization_c(2, order(0.6)).unwrap() / (2.0 - 1.2);
    assert!(rel(v.value, expect) < 1e-8);
}

fn poly_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn linearity(p in poly_strategy(), q in poly_strategy(),
                 wa in -2.0f64..2.0, wb in -2.0f64..2.0,
                 x in 0.05f64..0.95, a in 0.1f64..0.9) {
        let iv = Domain::unit_interval();
        let o = order(a);
        let u = Polynomial1d::new(p);
        let v = Polynomial1d::new(q);
        let comb = Combination { terms: vec![(wa, &u as &dyn ScalarField), (wb, &v)] };
        let lu = regional_apply(&u, &[x], &iv, o, &spec()).unwrap();
        let lv = regional_apply(&v, &[x], &iv, o, &spec()).unwrap();
        let lc = regional_apply(&comb, &[x], &iv, o, &spec()).unwrap();
        let err = lc.error_estimate + wa.abs() * lu.error_estimate + wb.abs() * lv.error_estimate;
        prop_assert!((lc.value - wa * lu.value - wb * lv.value).abs() <= 2.0 * err + 1e-9);
    }

    #[test]
    fn reflection(p in poly_strategy(), x in 0.05f64..0.95, a in 0.1f64..0.9) {
        let iv = Domain::unit_interval();
        let o = order(a);
        let coeffs = p.clone();
        let u = Polynomial1d::new(p);
        let reflected = FnField::new(move |z: &[f64]| {
            coeffs.iter().rev().fold(0.0, |acc, c| acc * (1.0 - z[0]) + c)
        });
        let lu = regional_apply(&u, &[x], &iv, o, &spec()).unwrap();
        let lr = regional_apply(&reflected, &[1.0 - x], &iv, o, &spec()).unwrap();
        prop_assert!((lu.value - lr.value).abs() <= 1e-9 * lu.value.abs().max(1.0));
    }

    #[test]
    fn kernel_scaling(p in poly_strategy(), x in 0.05f64..0.95, a in 0.1f64..0.9, l in 0.3f64..4.0) {
        let o = order(a);
        let coeffs = p.clone();
        let u = Polynomial1d::new(p);
        let scaled = FnField::new(move |z: &[f64]| {
            let t = z[0] / l;
            coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
        });
        let base = regional_apply(&u, &[x], &Domain::unit_interval(), o, &spec()).unwrap();
        let big = regional_apply(&scaled, &[l * x], &Domain::interval(0.0, l).unwrap(), o, &spec()).unwrap();
        let expect = l.powf(-2.0 * a) * base.value;
        prop_assert!((big.value - expect).abs() <= 1e-6 * expect.abs().max(1e-3));
    }
}
