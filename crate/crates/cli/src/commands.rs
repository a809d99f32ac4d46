use censorlap::barriers::{
    asymptotic_sweep, case_classifier, make_barrier, sweep_spec, BarrierKind, Sign,
};
use censorlap::constants::{
    c_alpha, d_alpha, gamma_constant, kappa_ball, kappa_interval, kappa_interval_quadrature,
    normalization_c, ExponentRegime, FractionalOrder,
};
use censorlap::geometry::Domain;
use censorlap::operator::{regional_apply, Polynomial1d, ScalarField};
use censorlap::quadrature::QuadratureSpec;
use censorlap::solver::{
    contradiction_witness, refinement_sweep, solve_poisson, BlowupThresholds, GridProblem,
};
use censorlap::verify::{run_check, Tolerances, VerifyConfig, CHECK_COUNT};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::params::{list, Params};
use crate::Output;

fn to_json<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Serialize(e.to_string()))
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Serialize(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Serialize(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Serialize(e.to_string()))
}

fn json_output(result: Value) -> Output {
    Output {
        result,
        csv: None,
        csv_on_stdout: false,
        failure: None,
    }
}

/// Default layer width of barrier fields.
const DEFAULT_DELTA: f64 = 0.1;

#[derive(Serialize)]
struct SignRow {
    alpha: f64,
    tau: f64,
    gamma: f64,
    sign: i8,
    expected_sign: i8,
}

fn sign_of(v: f64, margin: f64) -> i8 {
    if v > margin {
        1
    } else if v < -margin {
        -1
    } else {
        0
    }
}

pub fn constants(p: &mut Params) -> Result<Output, CliError> {
    if p.flag("table")? {
        let mut rows = Vec::new();
        for i in 1..=9 {
            let alpha = 0.1 * i as f64;
            let order = FractionalOrder::new(alpha)?;
            for j in 1..=15 {
                let tau = -1.0 + (2.0 * alpha + 1.0) * j as f64 / 16.0;
                let gamma = gamma_constant(order, tau)?;
                rows.push(SignRow {
                    alpha,
                    tau,
                    gamma,
                    sign: sign_of(gamma, 0.0),
                    expected_sign: sign_of(tau * (2.0 * alpha - 1.0 - tau), 0.0),
                });
            }
        }
        let csv = to_csv(&rows)?;
        return Ok(Output {
            result: json!({ "rows": rows.len() }),
            csv: Some(csv),
            csv_on_stdout: true,
            failure: None,
        });
    }
    let order = p.order()?;
    let tau: f64 = p.required("tau")?;
    let dim: usize = p.get("dim", 2)?;
    if order.check_tau(tau).is_err() {
        return p.invalid("tau", format!("tau must lie in (-1, 2 alpha) = (-1, {})", 2.0 * order.alpha));
    }
    if !(2..=3).contains(&dim) {
        return p.invalid("dim", "dimension must be 2 or 3");
    }
    let regime = ExponentRegime::classify(order, tau)?.regime;
    Ok(json_output(json!({
        "gamma": gamma_constant(order, tau)?,
        "c_alpha": c_alpha(order, tau)?,
        "c_1_alpha": normalization_c(1, order)?,
        "c_N_alpha": normalization_c(dim, order)?,
        "d_alpha": d_alpha(dim, order)?,
        "regime": regime,
    })))
}

fn point(p: &mut Params, domain: &Domain) -> Result<Vec<f64>, CliError> {
    let x: Vec<f64> = p.list("at", vec![])?;
    if x.len() != domain.dim() {
        return p.invalid("at", format!("expected {} coordinate(s)", domain.dim()));
    }
    if !domain.contains(&x) {
        return p.invalid("at", "point is not inside the domain");
    }
    Ok(x)
}

fn barrier_kind(p: &mut Params, key: &str, name: &str) -> Result<BarrierKind, CliError> {
    Ok(match name {
        "vtau" | "power" => BarrierKind::Power(p.required("tau")?),
        "vstar" | "log" => BarrierKind::Log,
        "w1" => BarrierKind::W1,
        other => return p.invalid(key, format!("unknown field '{other}'")),
    })
}

fn polynomial(p: &Params, key: &str, coeffs: &str) -> Result<Polynomial1d, CliError> {
    match list::<f64>(coeffs) {
        Ok(c) => Ok(Polynomial1d::new(c)),
        Err((_, message)) => p.invalid(key, message),
    }
}

pub fn opval(p: &mut Params) -> Result<Output, CliError> {
    let order = p.order()?;
    let domain = p.domain()?;
    let function = p.string("function", "vtau")?;
    let x = point(p, &domain)?;
    let spec = sweep_spec();
    let sample = if let Some(coeffs) = function.strip_prefix("poly:") {
        if domain.dim() != 1 {
            return p.invalid("function", "poly fields need an interval domain");
        }
        let poly = polynomial(p, "function", coeffs)?;
        regional_apply(&poly, &x, &domain, order, &spec)?
    } else {
        let kind = barrier_kind(p, "function", &function)?;
        let delta = p.get("delta", DEFAULT_DELTA)?;
        let b = make_barrier(kind, delta, &domain)?;
        regional_apply(&b, &x, &domain, order, &spec)?
    };
    Ok(json_output(to_json(&sample)?))
}

pub fn sweep(p: &mut Params) -> Result<Output, CliError> {
    let order = p.order()?;
    let domain = p.domain()?;
    let kind_name = p.string("kind", "power")?;
    let kind = barrier_kind(p, "kind", &kind_name)?;
    let rhos: Vec<f64> = p.list("rhos", vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4])?;
    let delta = p.get("delta", DEFAULT_DELTA)?;
    let barrier = make_barrier(kind, delta, &domain)?;
    let report = asymptotic_sweep(&barrier, order, &rhos, &sweep_spec())?;
    let expected_sign = match kind {
        BarrierKind::Power(tau) => case_classifier(order, tau)?.sign,
        BarrierKind::W1 => Sign::Positive,
        BarrierKind::Log => Sign::Indefinite,
    };
    let result = json!({
        "limit": report.extrapolated_limit,
        "exponent": report.fit_exponent,
        "expected_sign": expected_sign,
        "expected_limit": report.expected_limit,
        "extrapolation_order": report.extrapolation_order,
        "scaling": report.scaling,
        "candidates": report.candidates,
        "rows": report.rows,
    });
    Ok(Output {
        result,
        csv: Some(to_csv(&report.rows)?),
        csv_on_stdout: false,
        failure: None,
    })
}

pub fn kappa(p: &mut Params) -> Result<Output, CliError> {
    let order = p.order()?;
    let domain = p.domain()?;
    let x = point(p, &domain)?;
    let rho = domain.boundary_distance(&x)?;
    let result = match &domain {
        Domain::Interval { a, b } => {
            let closed = kappa_interval(x[0], *a, *b, order)?;
            let spec = QuadratureSpec::with_tolerances(1e-13, 1e-12);
            let quad = kappa_interval_quadrature(x[0], *a, *b, order, &spec)?;
            json!({
                "kappa": closed,
                "quadrature": quad.value,
                "quadrature_error": quad.error_estimate,
                "rho": rho,
                "scaled": closed * rho.powf(2.0 * order.alpha),
            })
        }
        Domain::Ball { center, .. } => {
            let k = kappa_ball(&x, &domain, order)?;
            let n = center.len();
            let dc = d_alpha(n, order)? * normalization_c(n, order)?;
            json!({
                "kappa": k,
                "rho": rho,
                "scaled": k * rho.powf(2.0 * order.alpha),
                "limit_dc_over_2alpha": dc / (2.0 * order.alpha),
                "limit_dc": dc,
            })
        }
    };
    Ok(json_output(result))
}

fn source(p: &mut Params) -> Result<Box<dyn Fn(f64) -> f64 + Sync>, CliError> {
    let spec = p.string("f", "const:1")?;
    if let Some(v) = spec.strip_prefix("const:") {
        let Ok(c) = v.trim().parse::<f64>() else {
            return p.invalid("f", format!("cannot parse constant '{v}'"));
        };
        return Ok(Box::new(move |_| c));
    }
    if let Some(coeffs) = spec.strip_prefix("poly:") {
        let poly = polynomial(p, "f", coeffs)?;
        return Ok(Box::new(move |x| poly.value(&[x])));
    }
    p.invalid("f", "expected const:V or poly:c0,c1,...")
}

fn boundary(p: &mut Params) -> Result<(f64, f64), CliError> {
    let h: Vec<f64> = p.list("h", vec![0.0, 0.0])?;
    match h[..] {
        [l, r] => Ok((l, r)),
        _ => p.invalid("h", "expected two endpoint values"),
    }
}

#[derive(Serialize)]
struct NodeRow {
    x: f64,
    u: f64,
}

pub fn solve(p: &mut Params) -> Result<Output, CliError> {
    let order = p.order()?;
    let domain = p.domain()?;
    let n: usize = p.get("n", 256)?;
    let f = source(p)?;
    let h = boundary(p)?;
    let problem = GridProblem::from_fn(domain, n, order, f, h)?;
    let s = solve_poisson(&problem)?;
    let rows: Vec<NodeRow> = s
        .nodes
        .iter()
        .zip(&s.u)
        .map(|(&x, &u)| NodeRow { x, u })
        .collect();
    Ok(Output {
        result: json!({ "n": n, "max_u": s.max_u, "residual": s.residual }),
        csv: Some(to_csv(&rows)?),
        csv_on_stdout: false,
        failure: None,
    })
}

fn thresholds(p: &mut Params) -> Result<BlowupThresholds, CliError> {
    let d = BlowupThresholds::default();
    Ok(BlowupThresholds {
        divergence: p.get("divergence", d.divergence)?,
        cauchy: p.get("cauchy", d.cauchy)?,
    })
}

pub fn blowup(p: &mut Params) -> Result<Output, CliError> {
    let order = p.order()?;
    let domain = p.domain()?;
    let levels: Vec<usize> = p.list("levels", vec![64, 128, 256, 512, 1024])?;
    let f = source(p)?;
    let h = boundary(p)?;
    let t = thresholds(p)?;
    let report = refinement_sweep(order, &domain, &*f, h, &levels, t)?;
    Ok(Output {
        result: to_json(&report)?,
        csv: Some(to_csv(&report.levels)?),
        csv_on_stdout: false,
        failure: None,
    })
}

pub fn witness(p: &mut Params) -> Result<Output, CliError> {
    let order = p.order()?;
    if order.alpha > 0.5 {
        return p.invalid("alpha", "the witness applies for alpha <= 1/2");
    }
    let n: usize = p.get("n", 128)?;
    let t0: f64 = p.get("t0", 1.0)?;
    let t_big: Option<f64> = p.optional("t_big")?;
    let domain = Domain::unit_interval();
    let problem = GridProblem::from_fn(domain.clone(), n, order, |_| t0, (0.0, 0.0))?;
    let candidate = solve_poisson(&problem)?.to_field(&domain);
    let w = contradiction_witness(&candidate, order, t0, t_big, &sweep_spec())?;
    let failure = (w.value >= 0.0).then(|| format!("witness value {} is not negative", w.value));
    Ok(Output {
        result: to_json(&w)?,
        csv: Some(to_csv(&w.barrier_rows)?),
        csv_on_stdout: false,
        failure,
    })
}

#[derive(Serialize)]
struct CheckRow<'a> {
    id: u8,
    name: &'a str,
    passed: bool,
    detail: &'a str,
}

pub fn verify_all(p: &mut Params, seed: u64) -> Result<Output, CliError> {
    let defaults = VerifyConfig::default();
    let ids: Vec<u8> = p.list("checks", (1..=CHECK_COUNT).collect())?;
    if let Some(bad) = ids.iter().find(|id| !(1..=CHECK_COUNT).contains(*id)) {
        return p.invalid("checks", format!("no check numbered {bad}"));
    }
    let cfg = VerifyConfig {
        seed,
        comparison_trials: p.get("trials", defaults.comparison_trials)?,
        touch_fields: p.get("touch_fields", defaults.touch_fields)?,
        levels: p.list("levels", defaults.levels)?,
        thresholds: thresholds(p)?,
        tolerances: Tolerances::default(),
    };
    let checks: Vec<_> = ids.iter().map(|&id| run_check(id, &cfg)).collect();
    for c in &checks {
        eprintln!(
            "check {:>2} {} {}",
            c.id,
            if c.passed { "PASS" } else { "FAIL" },
            c.name
        );
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} {} ({})", c.id, c.name, c.detail))
        .collect();
    let rows: Vec<CheckRow> = checks
        .iter()
        .map(|c| CheckRow {
            id: c.id,
            name: c.name,
            passed: c.passed,
            detail: &c.detail,
        })
        .collect();
    let csv = to_csv(&rows)?;
    let result = json!({
        "tolerances": cfg.tolerances,
        "passed": checks.len() - failed.len(),
        "failed": failed.len(),
        "checks": checks,
    });
    Ok(Output {
        result,
        csv: Some(csv),
        csv_on_stdout: false,
        failure: (!failed.is_empty()).then(|| failed.join("; ")),
    })
}
