//! Numerical toolkit for the regional fractional Laplacian
//! `(-Δ)^α_Ω u(x) = c_{N,α} p.v. ∫_Ω (u(x) - u(z)) / |z - x|^{N+2α} dz`
//! on intervals and balls.
//!
//! Modules, bottom-up:
//!
//! * [`quadrature`]: adaptive Gauss–Kronrod, graded endpoint transforms,
//!   principal values by excision and Richardson extrapolation.
//! * [`constants`]: normalisation `c_{N,α}`, the half-line constant `γ(α,τ)`,
//!   `d_α` and the killing density `κ_α`.
//! * [`geometry`]: intervals and balls with boundary distance and ray exits.
//! * [`operator`]: pointwise evaluation on the half-line, intervals and disks.
//! * [`barriers`]: boundary blow-up barrier fields and asymptotic sweeps.
//! * [`solver`]: collocation Poisson solver, comparison and touching tests,
//!   refinement sweeps and the non-existence witness.
//! * [`verify`]: the end-to-end check suite behind `censorlap verify-all`.

// negated comparisons are deliberate: they reject NaN along with bad values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod barriers;
pub mod constants;
pub mod error;
pub mod geometry;
pub mod operator;
pub mod quadrature;
pub mod solver;
pub mod verify;

pub use error::{Error, Result};

/// Library version embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
