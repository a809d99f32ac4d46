use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::FractionalOrder;
use crate::error::{domain_err, Error, Result};
use crate::geometry::Domain;

use super::{assemble, solve_with};

/// Largest grid for the brute-force comparison check.
pub const MAX_COMPARISON_NODES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub trial: usize,
    pub node: usize,
    pub supersolution: f64,
    pub subsolution: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub alpha: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub violations: Vec<Counterexample>,
    /// Smallest entry of `A⁻¹`.
    pub min_inverse_entry: f64,
    pub passed: bool,
}

/// Tolerance below which a negative entry of `A⁻¹` counts as rounding.
pub const INVERSE_TOLERANCE: f64 = 1e-12;

/// Random super/sub-solution pairs: the supersolution solves with `f ≥ 0`
/// and boundary data `h ≥ 0`, the subsolution with `f − p` (`p ≥ 0`) and
/// `θh` (`θ ∈ [0,1)`). Each pair must be ordered nodewise, and `A⁻¹` must
/// be entrywise non-negative.
pub fn comparison_check(
    domain: &Domain,
    order: FractionalOrder,
    n: usize,
    trials: usize,
    seed: u64,
) -> Result<ComparisonReport> {
    if n > MAX_COMPARISON_NODES {
        return domain_err(format!(
            "comparison check is brute force; n = {n} exceeds {MAX_COMPARISON_NODES}"
        ));
    }
    let op = assemble(domain, n, order)?;
    let inverse = op
        .matrix
        .clone()
        .try_inverse()
        .ok_or(Error::SingularSystem { n })?;
    let min_inverse_entry = inverse.iter().copied().fold(f64::INFINITY, f64::min);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    for trial in 0..trials {
        let f: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let h = (rng.gen::<f64>(), rng.gen::<f64>());
        let p: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
        let theta = rng.gen::<f64>();
        let sup = solve_with(&op, &f, h.0, h.1)?;
        let f_sub: Vec<f64> = f.iter().zip(&p).map(|(a, b)| a - b).collect();
        let sub = solve_with(&op, &f_sub, theta * h.0, theta * h.1)?;
        for (node, (s, b)) in sup.u.iter().zip(&sub.u).enumerate() {
            if b - s > 1e-10 * (1.0 + s.abs()) {
                violations.push(Counterexample {
                    trial,
                    node,
                    supersolution: *s,
                    subsolution: *b,
                });
            }
        }
    }
    let passed = violations.is_empty() && min_inverse_entry >= -INVERSE_TOLERANCE;
    Ok(ComparisonReport {
        alpha: order.alpha,
        n,
        trials,
        seed,
        violations,
        min_inverse_entry,
        passed,
    })
}
