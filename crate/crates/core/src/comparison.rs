//! Comparison geometry: the distance bound to a mean-convex boundary, model
//! ball volumes of constant curvature `-α²`, the Bishop–Gromov volume ratio
//! and an isoperimetric diagnostic.

use serde::{Deserialize, Serialize};

use crate::error::{arg, domain, Result};
use crate::quad::integrate;

const QUAD_TOL: f64 = 1e-13;

/// Lebesgue volume of the unit ball in `ℝⁿ`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / n as f64 * unit_ball_volume(n - 2),
    }
}

/// Simply connected space form of curvature `-α²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    pub n: usize,
    pub alpha: f64,
}

impl ModelSpace {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        if n < 2 {
            return arg(format!("dimension n = {n} must be at least 2"));
        }
        if !(alpha >= 0.0) {
            return arg(format!("α = {alpha} must be nonnegative"));
        }
        Ok(ModelSpace { n, alpha })
    }

    /// `sinh(αt)/α`, or `t` at `α = 0`.
    pub fn warp(&self, t: f64) -> f64 {
        let x = self.alpha * t;
        if x.abs() < 1e-4 {
            t * (1.0 + x * x / 6.0 + x.powi(4) / 120.0)
        } else {
            x.sinh() / self.alpha
        }
    }
}

/// `U(α, c₀)`: `1/c₀` at `α = 0`, else `arccoth(c₀/α)/α`.
pub fn hawking_bound(alpha: f64, c0: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return arg(format!("α = {alpha} must be nonnegative"));
    }
    if !(c0 > alpha) {
        return domain(format!("need c₀ > α (got c₀ = {c0}, α = {alpha})"));
    }
    if alpha == 0.0 {
        return Ok(1.0 / c0);
    }
    let q = alpha / c0;
    // arccoth(c₀/α) = artanh(α/c₀)
    Ok(q.atanh() / alpha)
}

/// `n c(n) ∫₀ʳ (sinh(αt)/α)^{n-1} dt`.
pub fn model_ball_volume(m: &ModelSpace, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return domain(format!("radius r = {r} must be positive"));
    }
    let n = m.n;
    let c = unit_ball_volume(n);
    if m.alpha == 0.0 {
        return Ok(c * r.powi(n as i32));
    }
    let body = integrate(|t| m.warp(t).powi(n as i32 - 1), 0.0, r, QUAD_TOL);
    Ok(n as f64 * c * body)
}

/// Volume of a geodesic ball of radius `r ≤ π` on the unit sphere `𝕊ⁿ`.
pub fn sphere_ball_volume(n: usize, r: f64) -> Result<f64> {
    if !(r > 0.0 && r <= std::f64::consts::PI) {
        return domain(format!("radius r = {r} must lie in (0, π]"));
    }
    let body = integrate(|t| t.sin().powi(n as i32 - 1), 0.0, r, QUAD_TOL);
    Ok(n as f64 * unit_ball_volume(n) * body)
}

/// Volume of the ball `{|x| < ρ}` for the radial conformal metric
/// `u(|x|)^{4/(n-2)} |dx|²`, together with its `g_u`-radius
/// `∫₀^ρ u^{2/(n-2)}`.
pub fn radial_conformal_ball(n: usize, u: impl Fn(f64) -> f64, rho: f64) -> Result<(f64, f64)> {
    if n < 3 {
        return arg(format!("dimension n = {n} must be at least 3"));
    }
    if !(rho > 0.0) {
        return domain(format!("radius ρ = {rho} must be positive"));
    }
    let nf = n as f64;
    let radius = integrate(|s| u(s).powf(2.0 / (nf - 2.0)), 0.0, rho, QUAD_TOL);
    let vol = integrate(
        |s| u(s).powf(2.0 * nf / (nf - 2.0)) * s.powi(n as i32 - 1),
        0.0,
        rho,
        QUAD_TOL,
    );
    Ok((nf * unit_ball_volume(n) * vol, radius))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub r: f64,
    pub volume: f64,
    pub model_volume: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub rows: Vec<RatioRow>,
    /// No successive ratio increases by more than [`MONOTONE_TOL`] (relative)
    pub nonincreasing: bool,
    /// Every successive ratio decreases
    pub strictly_decreasing: bool,
}

pub const MONOTONE_TOL: f64 = 1e-8;

/// `Vol(B_r) / Vol_model(B_r)` on a grid of radii.
pub fn bg_ratio(
    volumes: impl Fn(f64) -> Result<f64>,
    m: &ModelSpace,
    radii: &[f64],
) -> Result<RatioTable> {
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let volume = volumes(r)?;
        if !(volume > 0.0) {
            return domain(format!("volume {volume} at r = {r} is not positive"));
        }
        let model_volume = model_ball_volume(m, r)?;
        rows.push(RatioRow {
            r,
            volume,
            model_volume,
            ratio: volume / model_volume,
        });
    }
    let nonincreasing = rows
        .windows(2)
        .all(|w| w[1].ratio <= w[0].ratio * (1.0 + MONOTONE_TOL));
    let strictly_decreasing = rows.windows(2).all(|w| w[1].ratio < w[0].ratio);
    Ok(RatioTable {
        rows,
        nonincreasing,
        strictly_decreasing,
    })
}

/// `area^{n/(n-1)} / volume`.
pub fn isoperimetric_ratio(n: usize, area: f64, volume: f64) -> Result<f64> {
    if n < 2 {
        return arg(format!("dimension n = {n} must be at least 2"));
    }
    if !(area > 0.0 && volume > 0.0) {
        return domain(format!("area {area} and volume {volume} must be positive"));
    }
    let nf = n as f64;
    Ok(area.powf(nf / (nf - 1.0)) / volume)
}

/// The Euclidean ball's value of [`isoperimetric_ratio`], `n^{n/(n-1)} c(n)^{1/(n-1)}`.
pub fn euclidean_isoperimetric_constant(n: usize) -> f64 {
    let nf = n as f64;
    nf.powf(nf / (nf - 1.0)) * unit_ball_volume(n).powf(1.0 / (nf - 1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusRow {
    pub inner: f64,
    pub area: f64,
    pub volume: f64,
    /// `volume / area^{n/(n-1)}`; tends to zero as the annulus thins
    pub inverse_ratio: f64,
}

/// Flat annuli `inner < |x| < 1`; the area counts both boundary spheres.
pub fn annulus_table(n: usize, inners: &[f64]) -> Result<Vec<AnnulusRow>> {
    let c = unit_ball_volume(n);
    let nf = n as f64;
    inners
        .iter()
        .map(|&inner| {
            if !(inner > 0.0 && inner < 1.0) {
                return domain(format!("inner radius {inner} must lie in (0, 1)"));
            }
            let shell =
                |a: f64, b: f64| nf * c * integrate(|s| s.powi(n as i32 - 1), a, b, QUAD_TOL);
            let volume = shell(inner, 1.0);
            let area = nf * c * (1.0 + inner.powi(n as i32 - 1));
            Ok(AnnulusRow {
                inner,
                area,
                volume,
                inverse_ratio: 1.0 / isoperimetric_ratio(n, area, volume)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert!((unit_ball_volume(4) - PI * PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn hawking_examples() {
        assert_eq!(hawking_bound(0.0, 2.0).unwrap(), 0.5);
        assert!((hawking_bound(1.0, 2.0).unwrap() - 0.5 * 3f64.ln()).abs() < 1e-15);
        assert!(hawking_bound(2.0, 2.0).is_err());
        assert!((hawking_bound(1e-9, 2.0).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_ball_volume() {
        let m = ModelSpace::new(3, 1.0).unwrap();
        let exact = PI * (2f64.sinh() - 2.0);
        assert!((model_ball_volume(&m, 1.0).unwrap() - exact).abs() < 1e-10);
    }

    #[test]
    fn isoperimetric_scaling() {
        let a = isoperimetric_ratio(4, 3.0, 2.0).unwrap();
        let t: f64 = 1.7;
        let b = isoperimetric_ratio(4, t.powi(3) * 3.0, t.powi(4) * 2.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }
}
