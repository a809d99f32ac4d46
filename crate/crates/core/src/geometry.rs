//! Bounded domains: a single interval or a ball in two or three dimensions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    Ball { center: Vec<f64>, radius: f64 },
}

/// Points sampled at prescribed boundary distances inside the layer
/// `{x : ρ(x) < delta}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryLayer {
    pub delta: f64,
    pub rho: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return domain_err(format!("interval needs finite a < b (got {a}, {b})"));
        }
        Ok(Domain::Interval { a, b })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(center.len() == 2 || center.len() == 3) {
            return domain_err(format!("ball dimension must be 2 or 3 (got {})", center.len()));
        }
        if !(radius > 0.0 && radius.is_finite()) || center.iter().any(|c| !c.is_finite()) {
            return domain_err("ball needs a finite center and a positive radius");
        }
        Ok(Domain::Ball { center, radius })
    }

    pub fn unit_interval() -> Self {
        Domain::Interval { a: 0.0, b: 1.0 }
    }

    pub fn unit_disk() -> Self {
        Domain::Ball {
            center: vec![0.0, 0.0],
            radius: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Ball { center, .. } => center.len(),
        }
    }

    /// Largest boundary distance attained in the domain.
    pub fn inradius(&self) -> f64 {
        match self {
            Domain::Interval { a, b } => 0.5 * (b - a),
            Domain::Ball { radius, .. } => *radius,
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return domain_err(format!(
                "point has dimension {}, domain has dimension {}",
                x.len(),
                self.dim()
            ));
        }
        Ok(())
    }

    /// Signed distance to the boundary, positive inside. No checks.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Interval { a, b } => (x[0] - a).min(b - x[0]),
            Domain::Ball { center, radius } => radius - norm_diff(x, center),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.signed_distance(x) > 0.0
    }

    /// `ρ(x) = dist(x, ∂Ω)` for an interior point.
    pub fn boundary_distance(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        let rho = self.signed_distance(x);
        if rho > 0.0 {
            Ok(rho)
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }

    /// Distance `r > 0` along the unit vector `direction` from the interior
    /// point `x` to the boundary.
    pub fn ray_exit_distance(&self, x: &[f64], direction: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        if direction.len() != x.len() {
            return domain_err("direction dimension does not match the point");
        }
        let norm = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return domain_err(format!("direction must be a unit vector (|ω| = {norm})"));
        }
        if !self.contains(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        Ok(self.ray_exit_unchecked(x, direction))
    }

    pub(crate) fn ray_exit_unchecked(&self, x: &[f64], direction: &[f64]) -> f64 {
        match self {
            Domain::Interval { a, b } => {
                if direction[0] > 0.0 {
                    b - x[0]
                } else {
                    x[0] - a
                }
            }
            Domain::Ball { center, radius } => {
                let mut proj = 0.0;
                let mut dist2 = 0.0;
                for ((xi, ci), wi) in x.iter().zip(center).zip(direction) {
                    let y = xi - ci;
                    proj += y * wi;
                    dist2 += y * y;
                }
                let d = dist2.sqrt();
                let rho = radius - d;
                // R² - |y|² without cancellation
                let q = rho * (radius + d);
                let disc = (proj * proj + q).sqrt();
                if proj >= 0.0 {
                    q / (proj + disc)
                } else {
                    disc - proj
                }
            }
        }
    }

    /// Points at the requested boundary distances: `a + ρ` on an interval,
    /// `center + (R − ρ) e₁` on a ball.
    pub fn layer_samples(&self, delta: f64, rho_values: &[f64]) -> Result<BoundaryLayer> {
        let limit = delta.min(self.inradius());
        if !(delta > 0.0) {
            return domain_err("layer width delta must be positive");
        }
        let mut points = Vec::with_capacity(rho_values.len());
        for &rho in rho_values {
            if !(rho > 0.0 && rho < limit) {
                return domain_err(format!("boundary distance {rho} outside (0, {limit})"));
            }
            points.push(match self {
                Domain::Interval { a, .. } => vec![a + rho],
                Domain::Ball { center, radius } => {
                    let mut p = center.clone();
                    p[0] += radius - rho;
                    p
                }
            });
        }
        Ok(BoundaryLayer {
            delta,
            rho: rho_values.to_vec(),
            points,
        })
    }
}

impl Domain {
    /// Point at distance `d` before the exit along the ray `x + sω`
    /// (`s = exit − d`), together with its boundary distance computed
    /// without cancellation for small `d`.
    pub(crate) fn ray_point(&self, x: &[f64], dir: &[f64], exit: f64, d: f64) -> (Vec<f64>, f64) {
        match self {
            Domain::Interval { a, b } => {
                let z = if dir[0] > 0.0 { b - d } else { a + d };
                let other = if dir[0] > 0.0 { z - a } else { b - z };
                (vec![z], d.min(other))
            }
            Domain::Ball { center, radius } => {
                let s = exit - d;
                let mut proj = 0.0;
                let z: Vec<f64> = x
                    .iter()
                    .zip(dir)
                    .zip(center)
                    .map(|((xi, wi), ci)| {
                        proj += (xi - ci) * wi;
                        xi + s * wi
                    })
                    .collect();
                // R² − |y + sω|² = (exit − s)(s + 2 y·ω + exit)
                let n = norm_diff(&z, center);
                let rho = d * (s + 2.0 * proj + exit) / (radius + n);
                (z, rho)
            }
        }
    }

    /// Boundary-distance increments `ρ(x ± sω) − ρ(x)` and their sum, the
    /// sum formed without the `O(s)` cancellation.
    pub(crate) fn distance_increments(&self, x: &[f64], dir: &[f64], s: f64) -> (f64, f64, f64) {
        match self {
            Domain::Interval { a, b } => {
                let d1 = x[0] - a;
                let d2 = b - x[0];
                let t = s * dir[0].signum();
                // ρ(x + t) − ρ(x) = min(t, gap − t) measured from the nearer end
                let (near_sign, gap) = if d1 <= d2 { (1.0, d2 - d1) } else { (-1.0, d1 - d2) };
                let inc = |t: f64| {
                    let u = near_sign * t;
                    if u <= gap - u {
                        (u, true)
                    } else {
                        (gap - u, false)
                    }
                };
                let (p, lp) = inc(t);
                let (m, lm) = inc(-t);
                let sum = if lp && lm { 0.0 } else { p + m };
                (p, m, sum)
            }
            Domain::Ball { center, .. } => {
                let mut dist2 = 0.0;
                let mut proj = 0.0;
                for ((xi, ci), wi) in x.iter().zip(center).zip(dir) {
                    let y = xi - ci;
                    dist2 += y * y;
                    proj += y * wi;
                }
                let d = dist2.sqrt();
                let sb = s * proj;
                let np = (dist2 + 2.0 * sb + s * s).max(0.0).sqrt();
                let nm = (dist2 - 2.0 * sb + s * s).max(0.0).sqrt();
                let dp = d + np;
                let dm = d + nm;
                let plus = -(2.0 * sb + s * s) / dp;
                let minus = (2.0 * sb - s * s) / dm;
                let np_minus_nm = if np + nm > 0.0 { 4.0 * sb / (np + nm) } else { 0.0 };
                let sum = 2.0 * sb * np_minus_nm / (dp * dm) - s * s * (1.0 / dp + 1.0 / dm);
                (plus, minus, sum)
            }
        }
    }
}

pub(crate) fn norm_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Interval { a, b } => write!(f, "{{type: interval, a: {a}, b: {b}}}"),
            Domain::Ball { center, radius } => {
                write!(f, "{{type: ball, dim: {}, radius: {radius}", center.len())?;
                if center.iter().any(|c| *c != 0.0) {
                    let parts: Vec<String> = center.iter().map(|c| c.to_string()).collect();
                    write!(f, ", center: [{}]", parts.join(", "))?;
                }
                write!(f, "}}")
            }
        }
    }
}

/// Error from parsing a domain literal; `position` is a byte offset.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("malformed domain literal at column {}: {message}", .position + 1)]
pub struct ParseDomainError {
    pub position: usize,
    pub message: String,
}

/// Parses `{type: interval, a: 0, b: 1}` or
/// `{type: ball, dim: 2, radius: 1[, center: [x, y]]}`.
impl FromStr for Domain {
    type Err = ParseDomainError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let err = |position: usize, message: &str| ParseDomainError {
            position,
            message: message.to_string(),
        };
        let trimmed_start = s.len() - s.trim_start().len();
        let body = s.trim();
        if !body.starts_with('{') {
            return Err(err(trimmed_start, "expected '{'"));
        }
        if !body.ends_with('}') {
            return Err(err(trimmed_start + body.len().saturating_sub(1), "expected '}'"));
        }
        let inner_offset = trimmed_start + 1;
        let inner = &body[1..body.len() - 1];

        // split on commas outside brackets, remembering offsets
        let mut fields = Vec::new();
        let mut depth = 0usize;
        let mut start = 0;
        for (i, ch) in inner.char_indices() {
            match ch {
                '[' => depth += 1,
                ']' => {
                    depth = depth
                        .checked_sub(1)
                        .ok_or_else(|| err(inner_offset + i, "unbalanced ']'"))?
                }
                ',' if depth == 0 => {
                    fields.push((start, &inner[start..i]));
                    start = i + 1;
                }
                _ => {}
            }
        }
        if depth != 0 {
            return Err(err(inner_offset + inner.len(), "unbalanced '['"));
        }
        fields.push((start, &inner[start..]));

        let mut kind = None;
        let mut a = None;
        let mut b = None;
        let mut dim = None;
        let mut radius = None;
        let mut center: Option<Vec<f64>> = None;
        for (off, field) in fields {
            let pos = inner_offset + off + (field.len() - field.trim_start().len());
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let (key, value) = field
                .split_once(':')
                .ok_or_else(|| err(pos, "expected 'key: value'"))?;
            let value_pos = pos + key.len() + 1 + (value.len() - value.trim_start().len());
            let key = key.trim();
            let value = value.trim();
            let num = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| err(value_pos, &format!("invalid number '{v}' for '{key}'")))
            };
            match key {
                "type" => kind = Some((value.to_string(), value_pos)),
                "a" => a = Some(num(value)?),
                "b" => b = Some(num(value)?),
                "radius" => radius = Some(num(value)?),
                "dim" => {
                    dim = Some(
                        value
                            .parse::<usize>()
                            .map_err(|_| err(value_pos, "dim must be an integer"))?,
                    )
                }
                "center" => {
                    let v = value
                        .strip_prefix('[')
                        .and_then(|v| v.strip_suffix(']'))
                        .ok_or_else(|| err(value_pos, "center must be a list '[x, y]'"))?;
                    let coords = v
                        .split(',')
                        .map(|c| c.trim().parse::<f64>())
                        .collect::<std::result::Result<Vec<_>, _>>()
                        .map_err(|_| err(value_pos, "invalid center coordinate"))?;
                    center = Some(coords);
                }
                other => return Err(err(pos, &format!("unknown key '{other}'"))),
            }
        }
        let (kind, kind_pos) = kind.ok_or_else(|| err(inner_offset, "missing 'type'"))?;
        match kind.as_str() {
            "interval" => {
                let a = a.ok_or_else(|| err(inner_offset, "interval needs 'a'"))?;
                let b = b.ok_or_else(|| err(inner_offset, "interval needs 'b'"))?;
                Domain::interval(a, b).map_err(|e| err(inner_offset, &e.to_string()))
            }
            "ball" => {
                let radius = radius.ok_or_else(|| err(inner_offset, "ball needs 'radius'"))?;
                let dim = dim.unwrap_or(2);
                let center = center.unwrap_or_else(|| vec![0.0; dim]);
                if center.len() != dim {
                    return Err(err(inner_offset, "center length does not match dim"));
                }
                Domain::ball(center, radius).map_err(|e| err(inner_offset, &e.to_string()))
            }
            _ => Err(err(kind_pos, "type must be 'interval' or 'ball'")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_distance_examples() {
        let iv = Domain::unit_interval();
        assert!((iv.boundary_distance(&[0.3]).unwrap() - 0.3).abs() < 1e-15);
        let disk = Domain::unit_disk();
        assert!((disk.boundary_distance(&[0.6, 0.0]).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(disk.boundary_distance(&[0.0, 0.0]).unwrap(), 1.0);
        assert!(matches!(
            iv.boundary_distance(&[1.2]),
            Err(Error::OutsideDomain { .. })
        ));
        assert!(disk.boundary_distance(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn ray_exit_examples() {
        let disk = Domain::unit_disk();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((disk.ray_exit_distance(&[0.0, 0.0], &[s, s]).unwrap() - 1.0).abs() < 1e-15);
        assert!((disk.ray_exit_distance(&[0.5, 0.0], &[1.0, 0.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!((disk.ray_exit_distance(&[0.5, 0.0], &[-1.0, 0.0]).unwrap() - 1.5).abs() < 1e-15);
        assert!(disk.ray_exit_distance(&[0.5, 0.0], &[1.0, 1.0]).is_err());
        let iv = Domain::unit_interval();
        assert_eq!(iv.ray_exit_distance(&[0.25], &[-1.0]).unwrap(), 0.25);
    }

    #[test]
    fn layer_samples_round_trip() {
        let iv = Domain::unit_interval();
        let layer = iv.layer_samples(0.1, &[0.01]).unwrap();
        assert_eq!(layer.points[0], vec![0.01]);
        let disk = Domain::unit_disk();
        let rhos = [0.01, 1e-3, 1e-5];
        let layer = disk.layer_samples(0.1, &rhos).unwrap();
        assert_eq!(layer.points[0], vec![0.99, 0.0]);
        for (p, r) in layer.points.iter().zip(rhos) {
            assert!((disk.boundary_distance(p).unwrap() - r).abs() < 1e-14);
        }
        assert!(iv.layer_samples(0.1, &[0.2]).is_err());
        assert!(iv.layer_samples(0.1, &[0.0]).is_err());
    }

    #[test]
    fn parse_literals() {
        let d: Domain = "{type: interval, a: 0, b: 1}".parse().unwrap();
        assert_eq!(d, Domain::unit_interval());
        let d: Domain = "{type: ball, dim: 2, radius: 1}".parse().unwrap();
        assert_eq!(d, Domain::unit_disk());
        let d: Domain = "{type: ball, dim: 3, radius: 2, center: [1, 0, 0]}".parse().unwrap();
        assert_eq!(d.dim(), 3);
        assert_eq!(d.to_string().parse::<Domain>().unwrap(), d);
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = "{type: interval, a: zero, b: 1}".parse::<Domain>().unwrap_err();
        assert_eq!(e.position, 20);
        let e = "{type: square, a: 0}".parse::<Domain>().unwrap_err();
        assert_eq!(e.position, 7);
        let e = "type: interval".parse::<Domain>().unwrap_err();
        assert_eq!(e.position, 0);
        assert!("{type: interval, a: 1, b: 0}".parse::<Domain>().is_err());
    }

    proptest! {
        #[test]
        fn distance_is_one_lipschitz(x in -0.99f64..0.99, y in -0.99f64..0.99,
                                     u in -0.99f64..0.99, v in -0.99f64..0.99) {
            let disk = Domain::unit_disk();
            let p = [x * 0.7, y * 0.7];
            let q = [u * 0.7, v * 0.7];
            let d = (disk.boundary_distance(&p).unwrap() - disk.boundary_distance(&q).unwrap()).abs();
            prop_assert!(d <= norm_diff(&p, &q) + 1e-15);
        }

        #[test]
        fn ray_exit_lands_on_circle(r in 0.0f64..0.999, phi in 0.0f64..std::f64::consts::TAU, theta in 0.0f64..std::f64::consts::TAU) {
            let disk = Domain::unit_disk();
            let x = [r * phi.cos(), r * phi.sin()];
            let w = [theta.cos(), theta.sin()];
            let t = disk.ray_exit_distance(&x, &w).unwrap();
            let end = [x[0] + t * w[0], x[1] + t * w[1]];
            prop_assert!((end[0].hypot(end[1]) - 1.0).abs() < 1e-12);
        }

        #[test]
        fn ray_exit_continuous_in_direction(r in 0.0f64..0.95, theta in 0.0f64..std::f64::consts::TAU) {
            let disk = Domain::unit_disk();
            let x = [r, 0.0];
            let h = 1e-7;
            let a = disk.ray_exit_distance(&x, &[theta.cos(), theta.sin()]).unwrap();
            let b = disk.ray_exit_distance(&x, &[(theta + h).cos(), (theta + h).sin()]).unwrap();
            // |dr/dθ| ≤ r·R/ρ for the unit disk
            prop_assert!((a - b).abs() <= h * (1.0 + r / (1.0 - r)) + 1e-12);
        }
    }
}
