use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A point was required to lie strictly inside a domain.
    #[error("point {point:?} is not strictly inside the domain")]
    OutsideDomain { point: Vec<f64> },

    /// Quadrature exhausted its budget, or an excision sequence did not stabilise.
    #[error("quadrature did not converge: value {value:e}, error estimate {error:e}")]
    NonConverged { value: f64, error: f64 },

    /// The integrand produced a NaN or infinity at an interior node.
    #[error("integrand is not finite at t = {at:e}")]
    NonFinite { at: f64 },

    /// The Taylor ball around the evaluation point cannot be placed inside the domain.
    #[error("no admissible near-field radius: requested {requested:e}, boundary distance {rho:e}")]
    ExcisionTooLarge { requested: f64, rho: f64 },

    /// A barrier join polynomial is not positive on its range.
    #[error("barrier join is not positive: minimum {minimum:e} at rho = {at:e}")]
    PositivityViolation { minimum: f64, at: f64 },

    /// Dense solve failed.
    #[error("singular collocation system (n = {n})")]
    SingularSystem { n: usize },

    /// The touching function lies above the field inside the neighbourhood.
    #[error("touching function exceeds the field by {excess:e} at {at:e}")]
    TouchViolation { excess: f64, at: f64 },

    /// The minimum of the witness field sits next to the boundary.
    #[error("minimum of the witness field is not interior (node {node})")]
    NoInteriorMin { node: usize },

    /// The requested combination is outside the supported scope.
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
