//! Collocation solver for `(−Δ)^α_Ω u = f` on an interval with `u = h` at
//! the endpoints, and the numerical shadows of the comparison principle
//! and the non-existence theorem built on it.
//!
//! Unknowns are nodal values of a piecewise-linear interpolant. Cells away
//! from the collocation node are integrated exactly against the kernel; the
//! two adjacent cells use the quadratic Taylor model of the interpolant,
//! which keeps the principal value finite for every `α` and gives every
//! off-diagonal entry the sign of the kernel.

mod comparison;
mod sweep;
mod touch;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{normalization_c, FractionalOrder};
use crate::error::{domain_err, Error, Result};
use crate::geometry::Domain;
use crate::operator::NodalField;

pub use comparison::{comparison_check, ComparisonReport, Counterexample};
pub use sweep::{refinement_sweep, BlowupLevel, BlowupReport, BlowupThresholds, Verdict};
pub use touch::{
    contradiction_witness, viscosity_touch, TouchQuadratic, WitnessCase, WitnessReport,
    WITNESS_DELTA,
};

/// Smallest grid `assemble` accepts.
pub const MIN_NODES: usize = 8;

/// Collocation matrix on a uniform grid of an interval.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub alpha: f64,
    /// `A` acting on interior nodal values.
    pub matrix: DMatrix<f64>,
    /// Weights of the left and right boundary values; the operator applied to
    /// the interpolant is `A u − left·h_left − right·h_right`.
    pub coupling_left: DVector<f64>,
    pub coupling_right: DVector<f64>,
}

impl DiscreteOperator {
    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.n + 1) as f64
    }

    /// Interior node `i` for `i = 1..=n`; `0` and `n + 1` are the endpoints.
    pub fn node(&self, i: usize) -> f64 {
        self.a + i as f64 * self.spacing()
    }

    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.node(i)).collect()
    }

    /// Discrete operator applied to interior values `u` with boundary data.
    pub fn apply(&self, u: &[f64], h_left: f64, h_right: f64) -> Vec<f64> {
        let v = &self.matrix * DVector::from_column_slice(u)
            - &self.coupling_left * h_left
            - &self.coupling_right * h_right;
        v.iter().copied().collect()
    }

    /// `max_i |(A u − coupling·h − f)_i|`.
    pub fn residual(&self, u: &[f64], f: &[f64], h_left: f64, h_right: f64) -> f64 {
        self.apply(u, h_left, h_right)
            .iter()
            .zip(f)
            .map(|(r, fi)| (r - fi).abs())
            .fold(0.0, f64::max)
    }
}

/// Kernel weights `∫ s^{−1−2α}` and `∫ s^{−2α}` over `[s₀, s₀ + h]`, formed
/// without cancellation for `s₀ ≫ h`.
fn cell_moments(s0: f64, h: f64, a2: f64) -> (f64, f64) {
    let l = (h / s0).ln_1p();
    let m0 = -s0.powf(-a2) * (-a2 * l).exp_m1() / a2;
    let e = 1.0 - a2;
    let m1 = if e.abs() < 1e-12 {
        l
    } else {
        s0.powf(e) * (e * l).exp_m1() / e
    };
    (m0, m1)
}

/// Builds the collocation matrix for `n` interior nodes.
pub fn assemble(domain: &Domain, n: usize, order: FractionalOrder) -> Result<DiscreteOperator> {
    let Domain::Interval { a, b } = *domain else {
        return Err(Error::Unsupported("collocation is implemented on intervals only".into()));
    };
    if n < MIN_NODES {
        return domain_err(format!("need at least {MIN_NODES} interior nodes (got {n})"));
    }
    let h = (b - a) / (n + 1) as f64;
    let a2 = 2.0 * order.alpha;
    let c = normalization_c(1, order)?;
    // adjacent cells: the Taylor model u_i + u′s + ½u″s² with the discrete
    // second difference for u″ integrates to h^{−2α}/(2 − 2α) per neighbour
    let adjacent = h.powf(-a2) / (2.0 - a2);
    // cell j ≥ 1 spans [jh, (j+1)h] from the node; weights of its near and far ends
    let cells: Vec<(f64, f64)> = (1..=n)
        .map(|j| {
            let s0 = j as f64 * h;
            let s1 = s0 + h;
            let (m0, m1) = cell_moments(s0, h, a2);
            ((s1 * m0 - m1) / h, (m1 - s0 * m0) / h)
        })
        .collect();

    // weights against all n + 2 nodes, row by row
    let rows: Vec<Vec<f64>> = (1..=n)
        .into_par_iter()
        .map(|i| {
            let mut w = vec![0.0; n + 2];
            w[i - 1] += adjacent;
            w[i + 1] += adjacent;
            for (j, (near, far)) in cells.iter().enumerate().map(|(k, c)| (k + 1, c)) {
                if i + j < n + 1 {
                    w[i + j] += near;
                    w[i + j + 1] += far;
                }
                if j < i {
                    w[i - j] += near;
                    w[i - j - 1] += far;
                }
            }
            w.iter_mut().for_each(|x| *x *= c);
            w
        })
        .collect();

    let mut matrix = DMatrix::zeros(n, n);
    let mut left = DVector::zeros(n);
    let mut right = DVector::zeros(n);
    for (r, w) in rows.iter().enumerate() {
        let total: f64 = w.iter().sum();
        for k in 1..=n {
            matrix[(r, k - 1)] = -w[k];
        }
        matrix[(r, r)] = total;
        left[r] = w[0];
        right[r] = w[n + 1];
    }
    Ok(DiscreteOperator {
        a,
        b,
        n,
        alpha: order.alpha,
        matrix,
        coupling_left: left,
        coupling_right: right,
    })
}

/// A discrete Dirichlet problem `(−Δ)^α_Ω u = f`, `u = h` on `∂Ω`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridProblem {
    pub domain: Domain,
    pub n: usize,
    pub alpha: f64,
    /// `f` at the interior nodes.
    pub f_samples: Vec<f64>,
    pub h_left: f64,
    pub h_right: f64,
    /// Positive floor of `f` away from the boundary; zero means no floor.
    pub t0: f64,
    /// Width of the boundary strip where the floor is not required.
    pub eps: f64,
}

impl GridProblem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        domain: Domain,
        n: usize,
        order: FractionalOrder,
        f_samples: Vec<f64>,
        h: (f64, f64),
        t0: f64,
        eps: f64,
    ) -> Result<Self> {
        let Domain::Interval { a, b } = domain else {
            return Err(Error::Unsupported("grid problems live on intervals".into()));
        };
        if n < MIN_NODES {
            return domain_err(format!("need at least {MIN_NODES} interior nodes (got {n})"));
        }
        if f_samples.len() != n {
            return domain_err(format!("expected {n} samples of f, got {}", f_samples.len()));
        }
        if f_samples.iter().any(|v| !v.is_finite()) || !h.0.is_finite() || !h.1.is_finite() {
            return domain_err("source and boundary data must be finite");
        }
        if !(t0 >= 0.0 && eps >= 0.0) {
            return domain_err("floor t0 and strip width eps must be non-negative");
        }
        if t0 > 0.0 {
            let step = (b - a) / (n + 1) as f64;
            for (k, fk) in f_samples.iter().enumerate() {
                let x = a + (k + 1) as f64 * step;
                if (x - a).min(b - x) > eps && *fk < t0 {
                    return domain_err(format!("f = {fk} below the floor t0 = {t0} at x = {x}"));
                }
            }
        }
        Ok(GridProblem {
            domain,
            n,
            alpha: order.alpha,
            f_samples,
            h_left: h.0,
            h_right: h.1,
            t0,
            eps,
        })
    }

    /// Samples `f` at the interior nodes; no floor.
    pub fn from_fn(
        domain: Domain,
        n: usize,
        order: FractionalOrder,
        f: impl Fn(f64) -> f64,
        h: (f64, f64),
    ) -> Result<Self> {
        let Domain::Interval { a, b } = domain else {
            return Err(Error::Unsupported("grid problems live on intervals".into()));
        };
        let step = (b - a) / (n + 1) as f64;
        let samples = (1..=n).map(|i| f(a + i as f64 * step)).collect();
        Self::new(domain, n, order, samples, h, 0.0, 0.0)
    }

    pub fn order(&self) -> FractionalOrder {
        FractionalOrder::new(self.alpha).expect("validated on construction")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonSolution {
    pub nodes: Vec<f64>,
    pub u: Vec<f64>,
    pub h_left: f64,
    pub h_right: f64,
    pub residual: f64,
    pub max_u: f64,
}

impl PoissonSolution {
    /// The piecewise-linear interpolant including the boundary values.
    pub fn to_field(&self, domain: &Domain) -> NodalField {
        let (a, b) = match *domain {
            Domain::Interval { a, b } => (a, b),
            _ => unreachable!("solutions live on intervals"),
        };
        let mut values = Vec::with_capacity(self.u.len() + 2);
        values.push(self.h_left);
        values.extend_from_slice(&self.u);
        values.push(self.h_right);
        NodalField::new(a, b, values)
    }
}

/// Dense LU solve of the assembled system.
pub fn solve_poisson(problem: &GridProblem) -> Result<PoissonSolution> {
    let op = assemble(&problem.domain, problem.n, problem.order())?;
    solve_with(&op, &problem.f_samples, problem.h_left, problem.h_right)
}

/// Solves with an already assembled operator.
pub fn solve_with(
    op: &DiscreteOperator,
    f: &[f64],
    h_left: f64,
    h_right: f64,
) -> Result<PoissonSolution> {
    let n = op.n;
    let rhs = DVector::from_column_slice(f)
        + &op.coupling_left * h_left
        + &op.coupling_right * h_right;
    let u = op
        .matrix
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or(Error::SingularSystem { n })?;
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSystem { n });
    }
    let u: Vec<f64> = u.iter().copied().collect();
    let residual = op.residual(&u, f, h_left, h_right);
    let max_u = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(PoissonSolution {
        nodes: op.interior_nodes(),
        u,
        h_left,
        h_right,
        residual,
        max_u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_direct_formulas() {
        for &a2 in &[0.5, 1.0, 1.5] {
            let (s0, h) = (0.3, 0.1);
            let (m0, m1) = cell_moments(s0, h, a2);
            let s1: f64 = s0 + h;
            let d0 = (s0.powf(-a2) - s1.powf(-a2)) / a2;
            let d1 = if a2 == 1.0 {
                (s1 / s0).ln()
            } else {
                (s1.powf(1.0 - a2) - s0.powf(1.0 - a2)) / (1.0 - a2)
            };
            assert!((m0 - d0).abs() < 1e-13 * d0.abs());
            assert!((m1 - d1).abs() < 1e-13 * d1.abs());
        }
    }

    #[test]
    fn rejects_small_grids_and_balls() {
        let o = FractionalOrder::half();
        assert!(assemble(&Domain::unit_interval(), 4, o).is_err());
        assert!(matches!(
            assemble(&Domain::unit_disk(), 16, o),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn floor_is_checked_off_the_strip() {
        let o = FractionalOrder::new(0.3).unwrap();
        let d = Domain::unit_interval();
        let mut f = vec![1.0; 9];
        f[0] = 0.0;
        // node 0.1 lies inside a strip of width 0.15
        assert!(GridProblem::new(d.clone(), 9, o, f.clone(), (0.0, 0.0), 0.5, 0.15).is_ok());
        assert!(GridProblem::new(d, 9, o, f, (0.0, 0.0), 0.5, 0.05).is_err());
    }
}
