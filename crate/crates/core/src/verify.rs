//! End-to-end check suite. Each check reports the quantities it measured
//! alongside a pass flag; errors inside a check turn into a failure with
//! the error message as detail.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::barriers::{asymptotic_sweep, make_barrier, sweep_spec, BarrierKind};
use crate::constants::{
    c_alpha, constants_spec, d_alpha, d_alpha_quadrature, gamma_constant, kappa_ball,
    kappa_interval, kappa_interval_quadrature, normalization_c, FractionalOrder,
};
use crate::error::Result;
use crate::geometry::Domain;
use crate::operator::{halfline_log, halfline_power, NodalField};
use crate::quadrature::richardson;
use crate::solver::{
    assemble, comparison_check, contradiction_witness, refinement_sweep, solve_poisson,
    viscosity_touch, BlowupThresholds, GridProblem, TouchQuadratic, Verdict,
};

pub const CHECK_COUNT: u8 = 13;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub gamma_zero: f64,
    pub sign_margin: f64,
    pub symmetry: f64,
    pub halfline_log: f64,
    pub homogeneity: f64,
    pub d_alpha: f64,
    pub d_alpha_exact: f64,
    pub kappa_interval: f64,
    pub kappa_disk: f64,
    pub barrier_limit: f64,
    pub log_ratio: f64,
    pub w1_band: f64,
    pub inverse: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            gamma_zero: 1e-10,
            sign_margin: 1e-3,
            symmetry: 1e-9,
            halfline_log: 1e-6,
            homogeneity: 1e-6,
            d_alpha: 1e-8,
            d_alpha_exact: 1e-10,
            kappa_interval: 1e-8,
            kappa_disk: 0.05,
            barrier_limit: 0.02,
            log_ratio: 2.0,
            w1_band: 10.0,
            inverse: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub seed: u64,
    pub comparison_trials: usize,
    pub touch_fields: usize,
    pub levels: Vec<usize>,
    pub thresholds: BlowupThresholds,
    pub tolerances: Tolerances,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 20240601,
            comparison_trials: 200,
            touch_fields: 50,
            levels: vec![64, 128, 256, 512, 1024],
            thresholds: BlowupThresholds::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Measured {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub measured: Vec<Measured>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub version: &'static str,
    pub config: VerifyConfig,
    pub checks: Vec<CheckResult>,
    pub passed: usize,
    pub failed: usize,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.failed == 0
    }
}

/// Collects measured values and the pass decision of one check.
struct Outcome {
    measured: Vec<Measured>,
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            measured: Vec::new(),
            passed: true,
            detail: String::new(),
        }
    }

    fn record(&mut self, name: impl Into<String>, value: f64) {
        self.measured.push(Measured {
            name: name.into(),
            value,
        });
    }

    /// Records `value` and fails the check unless `ok`.
    fn require(&mut self, name: impl Into<String>, value: f64, ok: bool) {
        let name = name.into();
        if !ok {
            self.passed = false;
            if !self.detail.is_empty() {
                self.detail.push_str("; ");
            }
            self.detail.push_str(&format!("{name} = {value:e}"));
        }
        self.record(name, value);
    }
}

pub fn check_name(id: u8) -> &'static str {
    match id {
        1 => "gamma_zeros",
        2 => "gamma_sign_table",
        3 => "gamma_symmetry",
        4 => "halfline_log_identity",
        5 => "halfline_homogeneity",
        6 => "d_alpha_closed_form",
        7 => "kappa_closed_form_and_disk_limit",
        8 => "interval_barrier_limit",
        9 => "log_barrier_boundedness",
        10 => "w1_lower_bound",
        11 => "blowup_dichotomy",
        12 => "discrete_comparison",
        13 => "touch_sign_and_witness",
        _ => "unknown",
    }
}

/// Runs one check by number (1 to [`CHECK_COUNT`]).
pub fn run_check(id: u8, cfg: &VerifyConfig) -> CheckResult {
    let t = &cfg.tolerances;
    let result = match id {
        1 => gamma_zeros(t),
        2 => gamma_sign_table(t),
        3 => gamma_symmetry(t),
        4 => halfline_log_identity(t),
        5 => halfline_homogeneity(t),
        6 => d_alpha_check(t),
        7 => kappa_check(cfg),
        8 => barrier_limit(t),
        9 => log_boundedness(t),
        10 => w1_lower_bound(t),
        11 => blowup_dichotomy(cfg),
        12 => discrete_comparison(cfg),
        13 => touch_sign(cfg),
        _ => {
            let mut o = Outcome::new();
            o.passed = false;
            o.detail = format!("no check numbered {id}");
            Ok(o)
        }
    };
    let o = result.unwrap_or_else(|e| Outcome {
        measured: Vec::new(),
        passed: false,
        detail: e.to_string(),
    });
    CheckResult {
        id,
        name: check_name(id),
        passed: o.passed,
        measured: o.measured,
        detail: o.detail,
    }
}

pub fn run_all(cfg: &VerifyConfig) -> VerifyReport {
    let checks: Vec<CheckResult> = (1..=CHECK_COUNT).map(|id| run_check(id, cfg)).collect();
    let passed = checks.iter().filter(|c| c.passed).count();
    VerifyReport {
        version: crate::VERSION,
        config: cfg.clone(),
        failed: checks.len() - passed,
        checks,
        passed,
    }
}

fn order(a: f64) -> Result<FractionalOrder> {
    FractionalOrder::new(a)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Fifteen interior exponents of `(−1, 2α)` per order `0.1, …, 0.9`.
fn sign_grid() -> Vec<(f64, Vec<f64>)> {
    (1..=9)
        .map(|i| {
            let a = 0.1 * i as f64;
            let taus = (1..=15)
                .map(|j| -1.0 + (2.0 * a + 1.0) * j as f64 / 16.0)
                .collect();
            (a, taus)
        })
        .collect()
}

fn gamma_zeros(t: &Tolerances) -> Result<Outcome> {
    let mut o = Outcome::new();
    let g1 = gamma_constant(order(0.25)?, 0.0)?;
    let g2 = gamma_constant(order(0.75)?, 0.5)?;
    o.require("gamma(0.25,0)", g1, g1.abs() <= t.gamma_zero);
    o.require("gamma(0.75,0.5)", g2, g2.abs() <= t.gamma_zero);
    Ok(o)
}

fn gamma_sign_table(t: &Tolerances) -> Result<Outcome> {
    let mut o = Outcome::new();
    let mut checked = 0;
    let mut exceptions = 0;
    for (a, taus) in sign_grid() {
        let ord = order(a)?;
        for tau in taus {
            let p = tau * (2.0 * a - 1.0 - tau);
            if p.abs() <= t.sign_margin {
                continue;
            }
            checked += 1;
            if gamma_constant(ord, tau)?.signum() != p.signum() {
                exceptions += 1;
            }
        }
    }
    o.record("points_checked", checked as f64);
    o.require("exceptions", exceptions as f64, exceptions == 0);
    Ok(o)
}

fn gamma_symmetry(t: &Tolerances) -> Result<Outcome> {
    let mut o = Outcome::new();
    let mut worst: f64 = 0.0;
    for (a, taus) in sign_grid() {
        let ord = order(a)?;
        for tau in taus {
            let d = gamma_constant(ord, tau)? - gamma_constant(ord, 2.0 * a - 1.0 - tau)?;
            worst = worst.max(d.abs());
        }
    }
    o.require("max_abs_difference", worst, worst <= t.symmetry);
    Ok(o)
}

fn halfline_log_identity(t: &Tolerances) -> Result<Outcome> {
    let mut o = Outcome::new();
    for x in [0.1, 1.0, 10.0] {
        let v = halfline_log(FractionalOrder::half(), x)?;
        o.require(format!("value(t={x})"), v, v.abs() <= t.halfline_log);
    }
    Ok(o)
}

fn halfline_homogeneity(t: &Tolerances) -> Result<Outcome> {
    let mut o = Outcome::new();
    for (a, tau) in [(0.25, -0.25), (0.75, 0.4)] {
        let ord = order(a)?;
        let scaled = [0.5, 1.0, 2.0, 4.0]
            .iter()
            .map(|&x| Ok(halfline_power(ord, tau, x)? * x.powf(2.0 * a - tau)))
            .collect::<Result<Vec<f64>>>()?;
        let hi = scaled.iter().copied().fold(f64::MIN, f64::max);
        let lo = scaled.iter().copied().fold(f64::MAX, f64::min);
        let spread = (hi - lo) / lo.abs();
        let c = c_alpha(ord, tau)?;
        let agree = scaled.iter().map(|s| rel(*s, c)).fold(0.0, f64::max);
        o.require(format!("spread({a},{tau})"), spread, spread <= t.homogeneity);
        o.require(format!("vs_c_alpha({a},{tau})"), agree, agree <= t.homogeneity);
    }
    Ok(o)
}

fn d_alpha_check(t: &Tolerances) -> Result<Outcome> {
    let mut o = Outcome::new();
    let spec = constants_spec();
    for n in [2, 3] {
        for a in [0.25, 0.5, 0.75] {
            let ord = order(a)?;
            let q = d_alpha_quadrature(n, ord, &spec)?;
            let e = rel(q.value, d_alpha(n, ord)?);
            o.require(format!("rel_error(N={n},alpha={a})"), e, q.converged && e <= t.d_alpha);
        }
    }
    let half = d_alpha(2, FractionalOrder::half())?;
    o.require("d_half(N=2)", half, (half - 2.0).abs() <= t.d_alpha_exact);
    Ok(o)
}

fn kappa_check(cfg: &VerifyConfig) -> Result<Outcome> {
    let t = &cfg.tolerances;
    let mut o = Outcome::new();
    let spec = constants_spec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x: f64 = rng.gen_range(0.01..0.99);
        let a: f64 = rng.gen_range(0.05..0.95);
        let ord = order(a)?;
        let q = kappa_interval_quadrature(x, 0.0, 1.0, ord, &spec)?;
        worst = worst.max(rel(q.value, kappa_interval(x, 0.0, 1.0, ord)?));
    }
    o.require("interval_max_rel_error", worst, worst <= t.kappa_interval);

    // at α = 1/2 the boundary limit d_α c_{N,α} carries no 1/(2α) ambiguity
    let half = FractionalOrder::half();
    let disk = Domain::unit_disk();
    let rhos = [1e-2, 3e-3, 1e-3];
    let scaled = rhos
        .iter()
        .map(|r| Ok(kappa_ball(&[1.0 - r, 0.0], &disk, half)? * r))
        .collect::<Result<Vec<f64>>>()?;
    let limit = richardson(rhos[1], scaled[1], rhos[2], scaled[2], 1.0);
    let expected = d_alpha(2, half)? * normalization_c(2, half)?;
    o.record("disk_expected", expected);
    o.record("disk_extrapolated", limit);
    let e = rel(limit, expected);
    o.require("disk_rel_error", e, e <= t.kappa_disk);
    Ok(o)
}

fn barrier_limit(t: &Tolerances) -> Result<Outcome> {
    let mut o = Outcome::new();
    let d = Domain::unit_interval();
    for (a, tau) in [(0.3, -0.2), (0.75, 0.3)] {
        let b = make_barrier(BarrierKind::Power(tau), 0.1, &d)?;
        let r = asymptotic_sweep(&b, order(a)?, &[1e-2, 3e-3, 1e-3, 3e-4, 1e-4], &sweep_spec())?;
        let expected = c_alpha(order(a)?, tau)?;
        o.record(format!("expected({a},{tau})"), expected);
        o.record(format!("extrapolated({a},{tau})"), r.extrapolated_limit);
        let e = rel(r.extrapolated_limit, expected);
        o.require(format!("rel_error({a},{tau})"), e, e <= t.barrier_limit);
    }
    Ok(o)
}

fn log_boundedness(t: &Tolerances) -> Result<Outcome> {
    let mut o = Outcome::new();
    let b = make_barrier(BarrierKind::Log, 0.1, &Domain::unit_interval())?;
    let r = asymptotic_sweep(&b, FractionalOrder::half(), &[1e-2, 1e-4], &sweep_spec())?;
    // with inverse-log scaling the scaled value is op(V_*)/V_*
    let near = r.rows[1].scaled.abs();
    let far = r.rows[0].scaled.abs();
    o.record("ratio(rho=1e-2)", far);
    o.record("ratio(rho=1e-4)", near);
    let growth = near / far;
    o.require(
        "growth",
        growth,
        r.rows.iter().all(|row| row.valid) && growth <= t.log_ratio,
    );
    Ok(o)
}

fn w1_lower_bound(t: &Tolerances) -> Result<Outcome> {
    let mut o = Outcome::new();
    let b = make_barrier(BarrierKind::W1, 0.1, &Domain::unit_interval())?;
    let r = asymptotic_sweep(
        &b,
        FractionalOrder::half(),
        &[1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
        &sweep_spec(),
    )?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in &r.rows {
        o.require(
            format!("scaled(rho={:e})", row.rho),
            row.scaled,
            row.valid && row.scaled > 0.0,
        );
        lo = lo.min(row.scaled);
        hi = hi.max(row.scaled);
    }
    let band = if lo > 0.0 { hi / lo } else { f64::NAN };
    o.require("band", band, band <= t.w1_band);
    Ok(o)
}

fn blowup_dichotomy(cfg: &VerifyConfig) -> Result<Outcome> {
    let mut o = Outcome::new();
    let d = Domain::unit_interval();
    for (a, want) in [
        (0.3, Verdict::Divergent),
        (0.5, Verdict::Divergent),
        (0.75, Verdict::Convergent),
        (0.9, Verdict::Convergent),
    ] {
        let ord = FractionalOrder::new(a)?;
        let r = refinement_sweep(ord, &d, &|_| 1.0, (0.0, 0.0), &cfg.levels, cfg.thresholds)?;
        for (k, g) in r.growth_ratios.iter().enumerate() {
            o.record(format!("growth(alpha={a},{k})"), *g);
        }
        let code = match r.verdict {
            Verdict::Divergent => 1.0,
            Verdict::Convergent => 0.0,
            Verdict::Inconclusive => -1.0,
        };
        o.require(format!("verdict(alpha={a})"), code, r.verdict == want);
    }
    if !o.passed {
        o.detail.push_str(" (verdict codes: 1 divergent, 0 convergent, -1 inconclusive)");
    }
    Ok(o)
}

fn discrete_comparison(cfg: &VerifyConfig) -> Result<Outcome> {
    let mut o = Outcome::new();
    let d = Domain::unit_interval();
    for a in [0.3, 0.7] {
        let ord = order(a)?;
        let r = comparison_check(&d, ord, 32, cfg.comparison_trials, cfg.seed)?;
        o.require(
            format!("violations(alpha={a})"),
            r.violations.len() as f64,
            r.violations.is_empty(),
        );
        for n in [8, 16, 32, 64] {
            let inv = assemble(&d, n, ord)?
                .matrix
                .try_inverse()
                .ok_or(crate::Error::SingularSystem { n })?;
            let min = inv.iter().copied().fold(f64::INFINITY, f64::min);
            o.require(
                format!("min_inverse(alpha={a},n={n})"),
                min,
                min >= -cfg.tolerances.inverse,
            );
        }
    }
    Ok(o)
}

/// Grid size of the candidate solutions fed to the witness.
const WITNESS_NODES: usize = 128;

fn touch_sign(cfg: &VerifyConfig) -> Result<Outcome> {
    let mut o = Outcome::new();
    let d = Domain::unit_interval();
    let spec = sweep_spec();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cfg.touch_fields {
        let mut values: Vec<f64> = (0..20).map(|_| rng.gen_range(0.05..2.0)).collect();
        let m = rng.gen_range(3..17);
        values[m] = 0.0;
        let a: f64 = rng.gen_range(0.1..0.95);
        let field = NodalField::new(0.0, 1.0, values);
        let s = viscosity_touch(
            &field,
            field.node(m),
            TouchQuadratic::constant(0.0),
            0.5 * field.spacing(),
            &d,
            order(a)?,
            &spec,
        )?;
        worst = worst.max(s.value);
    }
    o.require("max_touch_value", worst, worst < 0.0);
    for a in [0.3, 0.5] {
        let ord = order(a)?;
        let p = GridProblem::from_fn(d.clone(), WITNESS_NODES, ord, |_| 1.0, (0.0, 0.0))?;
        let u = solve_poisson(&p)?.to_field(&d);
        let w = contradiction_witness(&u, ord, 1.0, None, &spec)?;
        o.require(format!("witness(alpha={a})"), w.value, w.value < 0.0);
    }
    Ok(o)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_fifteen_interior_exponents() {
        for (a, taus) in sign_grid() {
            assert_eq!(taus.len(), 15);
            assert!(taus.iter().all(|t| *t > -1.0 && *t < 2.0 * a));
        }
    }

    #[test]
    fn unknown_check_fails() {
        let r = run_check(99, &VerifyConfig::default());
        assert!(!r.passed);
        assert_eq!(r.name, "unknown");
    }

    #[test]
    fn cheap_checks_pass() {
        let cfg = VerifyConfig::default();
        for id in [1, 4, 6] {
            let r = run_check(id, &cfg);
            assert!(r.passed, "{r:?}");
            assert!(!r.measured.is_empty());
        }
    }
}
