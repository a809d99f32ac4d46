use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::FractionalOrder;
use crate::error::{domain_err, Result};
use crate::geometry::Domain;

use super::{solve_poisson, GridProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlowupThresholds {
    /// Every ratio of successive maxima must reach this for divergence.
    pub divergence: f64,
    /// Relative gap of the last two maxima allowed for convergence.
    pub cauchy: f64,
}

impl Default for BlowupThresholds {
    fn default() -> Self {
        BlowupThresholds {
            divergence: 1.2,
            cauchy: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Divergent,
    Convergent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupLevel {
    pub n: usize,
    pub max_u: f64,
    /// Maximum over the quarter of nodes nearest the boundary.
    pub boundary_layer_max: f64,
    pub residual: f64,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowupReport {
    pub alpha: f64,
    pub levels: Vec<BlowupLevel>,
    /// `max_u` ratios of successive valid levels.
    pub growth_ratios: Vec<f64>,
    pub thresholds: BlowupThresholds,
    pub verdict: Verdict,
}

/// Solves the Dirichlet problem on each grid and classifies the behaviour
/// of `max u` under refinement.
pub fn refinement_sweep(
    order: FractionalOrder,
    domain: &Domain,
    f: &(dyn Fn(f64) -> f64 + Sync),
    h: (f64, f64),
    levels: &[usize],
    thresholds: BlowupThresholds,
) -> Result<BlowupReport> {
    if levels.len() < 4 {
        return domain_err(format!("need at least 4 levels (got {})", levels.len()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) {
        return domain_err("levels must be increasing");
    }
    if !(thresholds.divergence > 1.0 && thresholds.cauchy > 0.0) {
        return domain_err("divergence threshold must exceed 1 and cauchy threshold be positive");
    }
    let records: Vec<BlowupLevel> = levels
        .par_iter()
        .map(|&n| {
            let solved = GridProblem::from_fn(domain.clone(), n, order, f, h)
                .and_then(|p| solve_poisson(&p));
            match solved {
                Ok(s) => {
                    let quarter = (n / 8).max(1);
                    let layer = s.u[..quarter]
                        .iter()
                        .chain(&s.u[n - quarter..])
                        .copied()
                        .fold(f64::NEG_INFINITY, f64::max);
                    BlowupLevel {
                        n,
                        max_u: s.max_u,
                        boundary_layer_max: layer,
                        residual: s.residual,
                        valid: true,
                    }
                }
                Err(_) => BlowupLevel {
                    n,
                    max_u: f64::NAN,
                    boundary_layer_max: f64::NAN,
                    residual: f64::NAN,
                    valid: false,
                },
            }
        })
        .collect();

    let maxima: Vec<f64> = records.iter().filter(|l| l.valid).map(|l| l.max_u).collect();
    let growth_ratios: Vec<f64> = maxima.windows(2).map(|w| w[1] / w[0]).collect();
    let verdict = classify(&maxima, &growth_ratios, &thresholds);
    Ok(BlowupReport {
        alpha: order.alpha,
        levels: records,
        growth_ratios,
        thresholds,
        verdict,
    })
}

fn classify(maxima: &[f64], ratios: &[f64], t: &BlowupThresholds) -> Verdict {
    if ratios.is_empty() {
        return Verdict::Inconclusive;
    }
    if ratios.iter().all(|r| *r >= t.divergence) {
        return Verdict::Divergent;
    }
    let last = maxima[maxima.len() - 1];
    let prev = maxima[maxima.len() - 2];
    if (last - prev).abs() <= t.cauchy * last.abs() {
        Verdict::Convergent
    } else {
        Verdict::Inconclusive
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_rules() {
        let t = BlowupThresholds::default();
        assert_eq!(classify(&[1.0, 1.3, 1.7], &[1.3, 1.7 / 1.3], &t), Verdict::Divergent);
        assert_eq!(classify(&[1.0, 1.1, 1.12], &[1.1, 1.12 / 1.1], &t), Verdict::Convergent);
        assert_eq!(classify(&[1.0, 1.1, 1.2], &[1.1, 1.2 / 1.1], &t), Verdict::Inconclusive);
        assert_eq!(classify(&[1.0], &[], &t), Verdict::Inconclusive);
    }
}
