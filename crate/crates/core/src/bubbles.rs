//! Standard bubbles `U_{a,p}(x) = c (a / (1 + a²|x-p|²))^{(n-2)/2}`,
//! `c = 2^{(n-2)/2}`, the stereographic conformal factor, and the blow-up
//! rescaling of a conformal factor about a point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cones::CurvatureFunction;
use crate::conformal::{
    conformal_metric_at, eigen_rel, ChartDomain, ConformalFactor, DerivativeMode, MetricField,
};
use crate::error::{arg, domain, Result};
use crate::expr::Expr;
use crate::jet::{Jet2, Real};

/// `c = 2^{(n-2)/2}`.
pub fn bubble_constant(n: usize) -> f64 {
    2f64.powf((n as f64 - 2.0) / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub n: usize,
    pub a: f64,
    pub p: Vec<f64>,
}

impl Bubble {
    pub fn new(a: f64, p: Vec<f64>) -> Result<Self> {
        let n = p.len();
        if n < 3 {
            return arg(format!("dimension n = {n} must be at least 3"));
        }
        if !(a > 0.0) {
            return arg(format!("bubble scale a = {a} must be positive"));
        }
        Ok(Bubble { n, a, p })
    }

    pub fn c(&self) -> f64 {
        bubble_constant(self.n)
    }

    fn exponent(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }

    fn dist_sq(&self, x: &[f64]) -> f64 {
        x.iter().zip(&self.p).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let q = self.a / (1.0 + self.a * self.a * self.dist_sq(x));
        self.c() * q.powf(self.exponent())
    }

    /// `∇U = -(n-2) a² U (x-p) / (1 + a²|x-p|²)`.
    pub fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let a2 = self.a * self.a;
        let d = 1.0 + a2 * self.dist_sq(x);
        let s = -(self.n as f64 - 2.0) * a2 * self.eval(x) / d;
        DVector::from_iterator(self.n, x.iter().zip(&self.p).map(|(xi, pi)| s * (xi - pi)))
    }

    /// `∇²U = U [ n(n-2) a⁴ (x-p)(x-p)ᵀ / d² - (n-2) a² I / d ]`, `d = 1 + a²|x-p|²`.
    pub fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let n = self.n as f64;
        let a2 = self.a * self.a;
        let d = 1.0 + a2 * self.dist_sq(x);
        let u = self.eval(x);
        let y = DVector::from_iterator(self.n, x.iter().zip(&self.p).map(|(xi, pi)| xi - pi));
        (&y * y.transpose()) * (u * n * (n - 2.0) * a2 * a2 / (d * d))
            - DMatrix::identity(self.n, self.n) * (u * (n - 2.0) * a2 / d)
    }

    pub fn expr(&self) -> Expr {
        Expr::c(self.c())
            * (Expr::c(self.a) / (Expr::c(1.0) + Expr::c(self.a * self.a) * Expr::dist_sq(&self.p)))
                .pow(self.exponent())
    }

    pub fn factor(&self) -> ConformalFactor {
        ConformalFactor::new(self.n, self.expr())
    }
}

/// Conformal factor of the round metric in stereographic coordinates,
/// `U_{1,0}(x)`, so that `(2/(1+|x|²))² = U_{1,0}^{4/(n-2)}`.
pub fn stereographic_factor(n: usize, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    bubble_constant(n) * (1.0 / (1.0 + r2)).powf((n as f64 - 2.0) / 2.0)
}

/// Pull-back of the round metric of `𝕊ⁿ ⊂ ℝⁿ⁺¹` under the inverse
/// stereographic projection `x ↦ (2x, |x|² - 1) / (1 + |x|²)`.
pub fn stereographic_pullback(x: &[f64]) -> DMatrix<f64> {
    let n = x.len();
    let pt = Jet2::point(x);
    let mut r2 = Jet2::cst(0.0);
    for xi in &pt {
        r2 = r2 + xi.clone() * xi.clone();
    }
    let denom = r2.shift(1.0).recip();
    let mut embed: Vec<Jet2> = pt.iter().map(|xi| xi.scale(2.0) * denom.clone()).collect();
    embed.push(r2.shift(-1.0) * denom);
    DMatrix::from_fn(n, n, |i, j| {
        embed.iter().map(|e| e.grad(i) * e.grad(j)).sum()
    })
}

/// Outcome of checking `λ(A_{g_U}) = (1/2, …, 1/2)` and `f(λ) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleReport {
    pub n: usize,
    pub a: f64,
    pub samples: usize,
    pub max_eigen_deviation: f64,
    pub max_f_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Default tolerance for a derivative mode: `1e-8` analytic, `1e-6` FD.
pub fn bubble_tolerance(mode: DerivativeMode) -> f64 {
    match mode {
        DerivativeMode::Analytic => 1e-8,
        DerivativeMode::FiniteDifference { .. } => 1e-6,
    }
}

/// Checks roundness of the bubble metric at `samples`.
///
/// In finite-difference mode the step is measured in units of the bubble's
/// length scale `1/a`.
pub fn bubble_verify(
    f: &CurvatureFunction,
    bubble: &Bubble,
    samples: &[Vec<f64>],
    mode: DerivativeMode,
) -> Result<BubbleReport> {
    let n = bubble.n;
    if f.n() != n {
        return arg(format!(
            "curvature function is for n = {}, bubble for n = {n}",
            f.n()
        ));
    }
    let g = MetricField::flat(n)?;
    let scaled = match mode {
        DerivativeMode::FiniteDifference { h, richardson } => DerivativeMode::FiniteDifference {
            h: h / bubble.a,
            richardson,
        },
        m => m,
    };
    let u = bubble.factor().with_mode(scaled);
    let (mut dev, mut fdev) = (0.0f64, 0.0f64);
    for x in samples {
        let a = crate::conformal::schouten_conformal(&g, &u, x)?;
        let lambda = eigen_rel(&a, &conformal_metric_at(&g, &u, x)?)?;
        for l in lambda.as_slice() {
            dev = dev.max((l - 0.5).abs());
        }
        fdev = fdev.max((f.eval_unchecked(lambda.as_slice()) - 1.0).abs());
    }
    let tolerance = bubble_tolerance(mode);
    Ok(BubbleReport {
        n,
        a: bubble.a,
        samples: samples.len(),
        max_eigen_deviation: dev,
        max_f_deviation: fdev,
        tolerance,
        pass: dev < tolerance && fdev < tolerance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScaleRule {
    /// `s = 2/(n-2)`
    Critical,
    /// `s = (p - 1)/2` for the subcritical exponent `p`
    Subcritical { p: f64 },
}

impl ScaleRule {
    pub fn exponent(&self, n: usize) -> f64 {
        match *self {
            ScaleRule::Critical => 2.0 / (n as f64 - 2.0),
            ScaleRule::Subcritical { p } => (p - 1.0) / 2.0,
        }
    }
}

/// `x ↦ (c/u(y₀)) u(y₀ + c^s u(y₀)^{-s} x)` on a flat chart.
///
/// The rescaled chart must still cover the unit ball; otherwise the scale is
/// too large for the factor's domain.
pub fn rescale_profile(
    u: &ConformalFactor,
    y0: &[f64],
    rule: ScaleRule,
) -> Result<ConformalFactor> {
    let n = u.n;
    if y0.len() != n {
        return arg(format!(
            "base point has {} coordinates, factor has {n}",
            y0.len()
        ));
    }
    if !u.domain.contains(y0) {
        return domain(format!("base point {y0:?} outside the factor's domain"));
    }
    let uy = u.value(y0);
    if !(uy > 0.0) {
        return domain(format!("u(y0) = {uy} is not positive"));
    }
    let c = bubble_constant(n);
    let s = rule.exponent(n);
    let scale = c.powf(s) * uy.powf(-s);
    let new_domain = match &u.domain {
        ChartDomain::Whole => ChartDomain::Whole,
        ChartDomain::Ball { center, radius } => {
            let center: Vec<f64> = center
                .iter()
                .zip(y0)
                .map(|(c, y)| (c - y) / scale)
                .collect();
            let radius = radius / scale;
            let dist = center.iter().map(|v| v * v).sum::<f64>().sqrt();
            if dist + 1.0 > radius {
                return domain(format!(
                    "rescaled chart of radius {radius:e} no longer covers the unit ball"
                ));
            }
            ChartDomain::Ball { center, radius }
        }
        ChartDomain::Box { lo, hi } => {
            let lo: Vec<f64> = lo.iter().zip(y0).map(|(l, y)| (l - y) / scale).collect();
            let hi: Vec<f64> = hi.iter().zip(y0).map(|(h, y)| (h - y) / scale).collect();
            if lo.iter().any(|&l| l > -1.0) || hi.iter().any(|&h| h < 1.0) {
                return domain("rescaled chart no longer covers the unit ball".to_string());
            }
            ChartDomain::Box { lo, hi }
        }
    };
    Ok(ConformalFactor {
        n,
        expr: Expr::c(c / uy) * u.expr.compose_affine(y0, scale),
        mode: u.mode,
        domain: new_domain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_value_and_translation() {
        let b = Bubble::new(1.0, vec![0.0; 4]).unwrap();
        assert!((b.eval(&[0.0; 4]) - 2.0).abs() < 1e-15);
        let b = Bubble::new(2.5, vec![0.3, -1.0, 0.2]).unwrap();
        let b0 = Bubble::new(2.5, vec![0.0; 3]).unwrap();
        let x = [1.0, 0.4, -0.7];
        let shifted = [0.7, 1.4, -0.9];
        assert!((b.eval(&x) - b0.eval(&shifted)).abs() < 1e-15);
        assert!((b.eval(&b.p) - b.c() * 2.5f64.powf(0.5)).abs() < 1e-14);
    }

    #[test]
    fn stereographic_identities() {
        for n in 3..=6 {
            assert!((stereographic_factor(n, &vec![0.0; n]) - bubble_constant(n)).abs() < 1e-15);
            let mut x = vec![0.0; n];
            x[0] = 0.6;
            x[1] = 0.8;
            assert!((stereographic_factor(n, &x) - 1.0).abs() < 1e-14);
            let y: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 0.4).collect();
            let w = stereographic_factor(n, &y).powf(4.0 / (n as f64 - 2.0));
            let pull = stereographic_pullback(&y);
            assert!((pull - DMatrix::identity(n, n) * w).amax() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(Bubble::new(0.0, vec![0.0; 3]).is_err());
        assert!(Bubble::new(1.0, vec![0.0; 2]).is_err());
    }

    #[test]
    fn rescale_errors_when_chart_is_too_small() {
        let u = ConformalFactor::constant(3, 1e-6).with_domain(ChartDomain::Ball {
            center: vec![0.0; 3],
            radius: 1.0,
        });
        // u(y0) tiny ⇒ scale huge ⇒ rescaled chart is tiny
        assert!(rescale_profile(&u, &[0.0; 3], ScaleRule::Critical).is_err());
    }
}
