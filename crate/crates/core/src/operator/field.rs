//! Scalar fields the operator can be applied to.

/// A real function on a domain.
///
/// Only `value` is required. The other methods let a field report
/// structure the quadrature can exploit; the defaults are always correct
/// but may lose digits close to the evaluation point.
pub trait ScalarField: Sync {
    fn value(&self, x: &[f64]) -> f64;

    /// Value at `z` when its boundary distance `rho` is already known
    /// accurately. Fields built on `ρ` should prefer `rho` over recomputing it.
    fn value_at(&self, z: &[f64], _rho: f64) -> f64 {
        self.value(z)
    }

    /// `u(x + sω) + u(x − sω) − 2u(x)`.
    fn symmetric_difference(&self, x: &[f64], dir: &[f64], s: f64) -> f64 {
        let p: Vec<f64> = x.iter().zip(dir).map(|(xi, wi)| xi + s * wi).collect();
        let m: Vec<f64> = x.iter().zip(dir).map(|(xi, wi)| xi - s * wi).collect();
        self.value(&p) + self.value(&m) - 2.0 * self.value(x)
    }

    /// Whether `symmetric_difference` keeps full relative accuracy as
    /// `s → 0`. When false, the operator replaces the innermost part of the
    /// near field by a second-order Taylor model.
    fn exact_difference(&self) -> bool {
        false
    }

    /// Upper bound on the Hessian norm over the ball of the given radius
    /// around `x`, if one is known.
    fn c2_bound(&self, _x: &[f64], _radius: f64) -> Option<f64> {
        None
    }

    /// Exponent `e` with `u ~ ρ^e` at the boundary, used to grade the
    /// quadrature there. `None` means bounded and smooth up to the boundary.
    fn boundary_exponent(&self) -> Option<f64> {
        None
    }

    /// Distances `s > 0` along `x + sω` where the field is not smooth.
    fn breakpoints(&self, _x: &[f64], _dir: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

/// `(1 + h)^τ − 1 − τh`, accurate for small `h`.
pub fn power_remainder(tau: f64, h: f64) -> f64 {
    if h.abs() <= 0.5 {
        let mut term = 0.5 * tau * (tau - 1.0) * h * h;
        let mut sum = term;
        for k in 2..80 {
            term *= (tau - k as f64) / (k as f64 + 1.0) * h;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else {
        (tau * h.ln_1p()).exp_m1() - tau * h
    }
}

/// `h − ln(1 + h)`, accurate for small `h`.
pub fn log_remainder(h: f64) -> f64 {
    if h.abs() <= 0.5 {
        let mut pow = h * h;
        let mut sum = 0.0;
        for k in 2..80 {
            let term = pow / k as f64;
            sum += if k % 2 == 0 { term } else { -term };
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            pow *= h;
        }
        sum
    } else {
        h - h.ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl ScalarField for Constant {
    fn exact_difference(&self) -> bool {
        true
    }
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn symmetric_difference(&self, _x: &[f64], _dir: &[f64], _s: f64) -> f64 {
        0.0
    }
    fn c2_bound(&self, _x: &[f64], _radius: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// `u(x) = offset + g·x`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub offset: f64,
    pub gradient: Vec<f64>,
}

impl ScalarField for Affine {
    fn exact_difference(&self) -> bool {
        true
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.offset + x.iter().zip(&self.gradient).map(|(a, b)| a * b).sum::<f64>()
    }
    fn symmetric_difference(&self, _x: &[f64], _dir: &[f64], _s: f64) -> f64 {
        0.0
    }
    fn c2_bound(&self, _x: &[f64], _radius: f64) -> Option<f64> {
        Some(0.0)
    }
}

/// Polynomial in one variable, `Σ c_k x^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial1d {
    pub coeffs: Vec<f64>,
}

impl Polynomial1d {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Polynomial1d { coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Taylor coefficients `u^{(k)}(x)/k!`.
    fn taylor(&self, x: f64) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        let n = c.len();
        // repeated synthetic division by (t − x)
        for k in 0..n {
            for j in (k..n - 1).rev() {
                c[j] += x * c[j + 1];
            }
        }
        c
    }
}

impl ScalarField for Polynomial1d {
    fn exact_difference(&self) -> bool {
        true
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x[0])
    }

    fn symmetric_difference(&self, x: &[f64], dir: &[f64], s: f64) -> f64 {
        let _ = dir;
        let t = self.taylor(x[0]);
        let s2 = s * s;
        let mut pow = s2;
        let mut sum = 0.0;
        for c in t.iter().skip(2).step_by(2) {
            sum += c * pow;
            pow *= s2;
        }
        2.0 * sum
    }

    fn c2_bound(&self, x: &[f64], radius: f64) -> Option<f64> {
        let m = x[0].abs() + radius;
        let mut bound = 0.0;
        for (k, c) in self.coeffs.iter().enumerate().skip(2) {
            bound += c.abs() * (k * (k - 1)) as f64 * m.powi(k as i32 - 2);
        }
        Some(bound)
    }
}

/// Closure-backed field with an optional global Hessian bound.
pub struct FnField<F: Fn(&[f64]) -> f64 + Sync> {
    pub f: F,
    pub hessian_bound: Option<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnField<F> {
    pub fn new(f: F) -> Self {
        FnField {
            f,
            hessian_bound: None,
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> ScalarField for FnField<F> {
    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn c2_bound(&self, _x: &[f64], _radius: f64) -> Option<f64> {
        self.hessian_bound
    }
}

/// Piecewise-linear interpolant of values on the uniform grid
/// `a = x_0 < … < x_{n+1} = b` (boundary values included).
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub a: f64,
    pub b: f64,
    pub values: Vec<f64>,
}

impl NodalField {
    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Self {
        assert!(values.len() >= 2, "nodal field needs at least the two boundary values");
        NodalField { a, b, values }
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.values.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.spacing()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = self.spacing();
        let last = self.values.len() - 1;
        let t = ((x - self.a) / h).clamp(0.0, last as f64);
        let i = (t.floor() as usize).min(last - 1);
        let w = t - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }
}

impl ScalarField for NodalField {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x[0])
    }

    fn breakpoints(&self, x: &[f64], dir: &[f64]) -> Vec<f64> {
        let h = self.spacing();
        (1..self.values.len() - 1)
            .map(|i| (self.a + i as f64 * h - x[0]) * dir[0].signum())
            .filter(|s| *s > 0.0)
            .collect()
    }
}

/// `inner` on the open ball `|z − center| < radius`, `outer` elsewhere.
pub struct Spliced<'a> {
    pub outer: &'a dyn ScalarField,
    pub inner: &'a dyn ScalarField,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Spliced<'_> {
    fn inside(&self, z: &[f64]) -> bool {
        crate::geometry::norm_diff(z, &self.center) < self.radius
    }
}

impl ScalarField for Spliced<'_> {
    fn exact_difference(&self) -> bool {
        self.inner.exact_difference()
    }
    fn value(&self, z: &[f64]) -> f64 {
        if self.inside(z) {
            self.inner.value(z)
        } else {
            self.outer.value(z)
        }
    }

    fn value_at(&self, z: &[f64], rho: f64) -> f64 {
        if self.inside(z) {
            self.inner.value_at(z, rho)
        } else {
            self.outer.value_at(z, rho)
        }
    }

    fn symmetric_difference(&self, x: &[f64], dir: &[f64], s: f64) -> f64 {
        if crate::geometry::norm_diff(x, &self.center) + s < self.radius {
            return self.inner.symmetric_difference(x, dir, s);
        }
        let p: Vec<f64> = x.iter().zip(dir).map(|(xi, wi)| xi + s * wi).collect();
        let m: Vec<f64> = x.iter().zip(dir).map(|(xi, wi)| xi - s * wi).collect();
        self.value(&p) + self.value(&m) - 2.0 * self.value(x)
    }

    fn c2_bound(&self, x: &[f64], radius: f64) -> Option<f64> {
        if crate::geometry::norm_diff(x, &self.center) + radius < self.radius {
            self.inner.c2_bound(x, radius)
        } else {
            None
        }
    }

    fn boundary_exponent(&self) -> Option<f64> {
        self.outer.boundary_exponent()
    }

    fn breakpoints(&self, x: &[f64], dir: &[f64]) -> Vec<f64> {
        let mut out = self.outer.breakpoints(x, dir);
        // exit points of the ray from the splice ball
        let mut proj = 0.0;
        let mut dist2 = 0.0;
        for ((xi, ci), wi) in x.iter().zip(&self.center).zip(dir) {
            proj += (xi - ci) * wi;
            dist2 += (xi - ci) * (xi - ci);
        }
        let disc = proj * proj - dist2 + self.radius * self.radius;
        if disc > 0.0 {
            let r = disc.sqrt();
            out.extend([-proj - r, -proj + r].into_iter().filter(|s| *s > 0.0));
        }
        out
    }
}

/// `Σ w_k u_k`.
pub struct Combination<'a> {
    pub terms: Vec<(f64, &'a dyn ScalarField)>,
}

impl ScalarField for Combination<'_> {
    fn exact_difference(&self) -> bool {
        self.terms.iter().all(|(_, u)| u.exact_difference())
    }
    fn value(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(w, u)| w * u.value(x)).sum()
    }
    fn value_at(&self, z: &[f64], rho: f64) -> f64 {
        self.terms.iter().map(|(w, u)| w * u.value_at(z, rho)).sum()
    }
    fn symmetric_difference(&self, x: &[f64], dir: &[f64], s: f64) -> f64 {
        self.terms
            .iter()
            .map(|(w, u)| w * u.symmetric_difference(x, dir, s))
            .sum()
    }
    fn c2_bound(&self, x: &[f64], radius: f64) -> Option<f64> {
        self.terms.iter().try_fold(0.0, |acc, (w, u)| {
            u.c2_bound(x, radius).map(|b| acc + w.abs() * b)
        })
    }
    fn boundary_exponent(&self) -> Option<f64> {
        self.terms
            .iter()
            .filter_map(|(_, u)| u.boundary_exponent())
            .reduce(f64::min)
    }
    fn breakpoints(&self, x: &[f64], dir: &[f64]) -> Vec<f64> {
        self.terms
            .iter()
            .flat_map(|(_, u)| u.breakpoints(x, dir))
            .collect()
    }
}
