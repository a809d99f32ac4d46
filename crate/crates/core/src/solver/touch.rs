use serde::Serialize;

use crate::barriers::{asymptotic_sweep, make_barrier, BarrierKind, SweepRow};
use crate::constants::FractionalOrder;
use crate::error::{domain_err, Error, Result};
use crate::geometry::Domain;
use crate::operator::{
    regional_apply, regional_apply_with_radius, Combination, NodalField, OperatorSample,
    Polynomial1d, ScalarField, Spliced,
};
use crate::quadrature::QuadratureSpec;

/// `φ(x) = c₀ + c₁(x − x₀) + c₂(x − x₀)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TouchQuadratic {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl TouchQuadratic {
    pub fn constant(c0: f64) -> Self {
        TouchQuadratic { c0, c1: 0.0, c2: 0.0 }
    }

    fn polynomial(&self, x0: f64) -> Polynomial1d {
        Polynomial1d::new(vec![
            self.c0 - self.c1 * x0 + self.c2 * x0 * x0,
            self.c1 - 2.0 * self.c2 * x0,
            self.c2,
        ])
    }
}

/// Sample points per side when checking that `φ` lies below `u`.
const TOUCH_SAMPLES: usize = 64;

/// Operator value at `x₀` of the field equal to `φ` within `radius` of `x₀`
/// and to `u` elsewhere, after checking that `φ ≤ u` there.
pub fn viscosity_touch(
    u: &dyn ScalarField,
    x0: f64,
    phi: TouchQuadratic,
    radius: f64,
    domain: &Domain,
    order: FractionalOrder,
    spec: &QuadratureSpec,
) -> Result<OperatorSample> {
    let rho = domain.boundary_distance(&[x0])?;
    if !(radius > 0.0 && radius < rho) {
        return Err(Error::ExcisionTooLarge {
            requested: radius,
            rho,
        });
    }
    let inner = phi.polynomial(x0);
    for k in -(TOUCH_SAMPLES as i64)..=TOUCH_SAMPLES as i64 {
        let z = x0 + radius * k as f64 / TOUCH_SAMPLES as f64;
        let uz = u.value(&[z]);
        let excess = inner.eval(z) - uz;
        if excess > 1e-10 * (1.0 + uz.abs()) {
            return Err(Error::TouchViolation { excess, at: z });
        }
    }
    let spliced = Spliced {
        outer: u,
        inner: &inner,
        center: vec![x0],
        radius,
    };
    regional_apply_with_radius(&spliced, &[x0], domain, order, spec, radius.min(0.5 * rho))
}

/// Layer width of the witness barrier.
pub const WITNESS_DELTA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessCase {
    /// `α < 1/2`, barrier `V_{α−1/2}`.
    PowerBarrier,
    /// `α = 1/2`, barrier `w₁ = V_* − V_{1/4}`.
    LogBarrier,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WitnessReport {
    pub alpha: f64,
    pub case: WitnessCase,
    pub tau0: f64,
    pub t0: f64,
    /// Bound on `|op(barrier)|` away from the layer `ρ < δ₁`.
    pub t_big: f64,
    pub delta1: f64,
    /// Barrier sweep from which `δ₁` was read.
    pub barrier_rows: Vec<SweepRow>,
    /// Grid node of the minimum of `w` and the refined minimiser.
    pub minimum_node: usize,
    pub x0: f64,
    pub w_min: f64,
    /// Operator value of `w` touched by the constant `w(x₀)`.
    pub value: f64,
    pub error_estimate: f64,
}

/// Points per side of the interior region where `T₀` is measured.
const T0_SAMPLES: usize = 40;

/// Builds `w = B + (T₀/t₀)u` from a claimed super-solution `u` and a
/// boundary blow-up barrier `B`, finds its interior minimum and reports the
/// operator value of `w` touched there by a constant. A negative value
/// contradicts `u` being a super-solution with `f ≥ t₀`.
pub fn contradiction_witness(
    candidate: &NodalField,
    order: FractionalOrder,
    t0: f64,
    t_big: Option<f64>,
    spec: &QuadratureSpec,
) -> Result<WitnessReport> {
    if order.alpha > 0.5 {
        return domain_err(format!("witness needs alpha <= 1/2 (got {})", order.alpha));
    }
    if !(t0 > 0.0) {
        return domain_err("t0 must be positive");
    }
    if candidate.values.iter().any(|v| !v.is_finite()) {
        return domain_err("candidate values must be finite");
    }
    let domain = Domain::interval(candidate.a, candidate.b)?;
    let (case, kind, tau0) = if order.is_half {
        (WitnessCase::LogBarrier, BarrierKind::W1, 0.25)
    } else {
        let tau0 = order.alpha - 0.5;
        (WitnessCase::PowerBarrier, BarrierKind::Power(tau0), tau0)
    };
    let barrier = make_barrier(kind, WITNESS_DELTA, &domain)?;

    // δ₁: largest sampled distance below which the barrier's operator stays positive
    let rhos: Vec<f64> = (1..=12)
        .map(|k| 0.25 * WITNESS_DELTA * 0.5f64.powi(k))
        .collect();
    let sweep = asymptotic_sweep(&barrier, order, &rhos, spec)?;
    let mut delta1 = None;
    for row in sweep.rows.iter().rev() {
        if row.valid && row.raw > 0.0 {
            delta1 = Some(row.rho);
        } else {
            break;
        }
    }
    let delta1 = delta1.ok_or_else(|| {
        Error::Domain("barrier operator is not positive at any sampled distance".into())
    })?;

    let t_big = match t_big {
        Some(t) if t > 0.0 => t,
        Some(t) => return domain_err(format!("T0 must be positive (got {t})")),
        None => measured_t_big(&barrier, &domain, order, delta1, spec)?,
    };

    let weight = t_big / t0;
    let w = Combination {
        terms: vec![(1.0, &barrier as &dyn ScalarField), (weight, candidate)],
    };
    let (minimum_node, x0) = locate_minimum(&w, candidate)?;
    let w_min = w.value(&[x0]);
    let rho0 = domain.boundary_distance(&[x0])?;
    let radius = (0.5 * candidate.spacing()).min(0.5 * rho0);
    let sample = viscosity_touch(
        &w,
        x0,
        TouchQuadratic::constant(w_min),
        radius,
        &domain,
        order,
        spec,
    )?;
    Ok(WitnessReport {
        alpha: order.alpha,
        case,
        tau0,
        t0,
        t_big,
        delta1,
        barrier_rows: sweep.rows,
        minimum_node,
        x0,
        w_min,
        value: sample.value,
        error_estimate: sample.error_estimate,
    })
}

fn measured_t_big(
    barrier: &dyn ScalarField,
    domain: &Domain,
    order: FractionalOrder,
    delta1: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let Domain::Interval { a, b } = *domain else {
        unreachable!("witness runs on intervals");
    };
    let lo = a + delta1;
    let hi = b - delta1;
    let mut t: f64 = 0.0;
    for k in 0..=2 * T0_SAMPLES {
        let x = lo + (hi - lo) * k as f64 / (2 * T0_SAMPLES) as f64;
        let s = regional_apply(barrier, &[x], domain, order, spec)?;
        t = t.max(s.value.abs());
    }
    Ok(t)
}

/// Halvings of the boundary cell tried before giving up on an interior minimum.
const BOUNDARY_REFINEMENTS: i32 = 60;

/// Minimum of `w` over the interval: the best grid node, then either the
/// two cells around it or, when that node borders the boundary, a dyadic
/// walk into the boundary cell until `w` turns upwards.
fn locate_minimum(w: &dyn ScalarField, grid: &NodalField) -> Result<(usize, f64)> {
    let n = grid.values.len() - 2;
    let f = |x: f64| w.value(&[x]);
    let (node, _) = (1..=n)
        .map(|i| (i, f(grid.node(i))))
        .fold((0, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
    if node > 1 && node < n {
        return Ok((node, golden_minimum(f, grid.node(node - 1), grid.node(node + 1))));
    }
    let h = grid.spacing();
    // distance from the nearer endpoint, mapped back to a coordinate
    let at = |t: f64| if node == 1 { grid.a + t } else { grid.b - t };
    let mut outer = 2.0 * h;
    let mut t = h;
    let mut ft = f(at(t));
    for _ in 0..BOUNDARY_REFINEMENTS {
        let inner = 0.5 * t;
        let fi = f(at(inner));
        if fi >= ft {
            let (p, q) = (at(inner), at(outer));
            return Ok((node, golden_minimum(f, p.min(q), p.max(q))));
        }
        outer = t;
        t = inner;
        ft = fi;
    }
    Err(Error::NoInteriorMin { node })
}

/// Golden-section search for a minimum of `f` on `[lo, hi]`.
fn golden_minimum(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-13 * (1.0 + lo.abs()) {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let x = golden_minimum(|x| (x - 0.3).powi(2) + 1.0, 0.0, 1.0);
        assert!((x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn quadratic_expands_about_touch_point() {
        let q = TouchQuadratic {
            c0: 1.0,
            c1: -2.0,
            c2: 3.0,
        };
        let p = q.polynomial(0.4);
        let x: f64 = 0.7;
        let direct = 1.0 - 2.0 * (x - 0.4) + 3.0 * (x - 0.4).powi(2);
        assert!((p.eval(x) - direct).abs() < 1e-14);
    }
}
