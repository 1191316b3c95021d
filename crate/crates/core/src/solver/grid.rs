use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{arg, Error, Result};
use crate::quad::integrate_panels;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridKind {
    /// `θ_j = jπ/N` with cosine-series differentiation
    Uniform,
    /// the same nodes, differentiated as polynomials in `cos θ` through
    /// the Chebyshev–Lobatto collocation matrix
    Chebyshev,
}

/// Polar-angle nodes on `[0, π]` with differentiation and quadrature
/// matrices for zonal functions on `𝕊ⁿ`.
///
/// First derivatives vanish at both poles by construction.
#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub kind: GridKind,
    pub n: usize,
    pub theta: Vec<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// `Δ_g` on zonal functions, `∂² + (n-1) cot θ ∂`, and `n ∂²` at the poles
    pub lap: DMatrix<f64>,
    /// `Σ_j w_j φ_j ≈ ∫₀^π φ(θ) sin^{n-1}θ dθ`
    pub weights: Vec<f64>,
}

impl RadialGrid {
    /// `nodes - 1` intervals; `n` is the sphere dimension.
    pub fn new(kind: GridKind, intervals: usize, n: usize) -> Result<Self> {
        if intervals < 2 {
            return arg(format!("need at least 2 intervals, got {intervals}"));
        }
        if n < 3 {
            return arg(format!("dimension n = {n} must be at least 3"));
        }
        let big_n = intervals;
        let m = big_n + 1;
        // cos(kθ) = T_k(cos θ): the quadrature basis is shared
        let basis = DMatrix::from_fn(m, m, |j, k| (k as f64 * j as f64 * PI / big_n as f64).cos());
        let inv = basis
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Numerical("singular interpolation matrix".into()))?;
        let (theta, d1, d2) = match kind {
            GridKind::Uniform => {
                let theta: Vec<f64> = (0..m).map(|j| j as f64 * PI / big_n as f64).collect();
                let s = DMatrix::from_fn(m, m, |j, k| -(k as f64) * (k as f64 * theta[j]).sin());
                let c =
                    DMatrix::from_fn(m, m, |j, k| -((k * k) as f64) * (k as f64 * theta[j]).cos());
                let mut d1 = s * &inv;
                d1.row_mut(0).fill(0.0);
                d1.row_mut(big_n).fill(0.0);
                (theta, d1, c * &inv)
            }
            GridKind::Chebyshev => {
                let x: Vec<f64> = (0..m)
                    .map(|j| (j as f64 * PI / big_n as f64).cos())
                    .collect();
                let theta: Vec<f64> = (0..m).map(|j| j as f64 * PI / big_n as f64).collect();
                let dx = chebyshev_matrix(&x);
                let dxx = &dx * &dx;
                // chain rule from x = cos θ; the sin θ factor zeroes the pole rows
                let d1 = DMatrix::from_fn(m, m, |i, j| {
                    if i == 0 || i == big_n {
                        0.0
                    } else {
                        -theta[i].sin() * dx[(i, j)]
                    }
                });
                let d2 = DMatrix::from_fn(m, m, |i, j| {
                    theta[i].sin().powi(2) * dxx[(i, j)] - x[i] * dx[(i, j)]
                });
                (theta, d1, d2)
            }
        };
        let (d1, d2) = (exact_on_constants(d1), exact_on_constants(d2));
        let mut lap = d2.clone();
        let nf = n as f64;
        for j in 0..m {
            if j == 0 || j == big_n {
                lap.set_row(j, &(d2.row(j) * nf));
            } else {
                let cot = theta[j].cos() / theta[j].sin();
                lap.set_row(j, &(d2.row(j) + d1.row(j) * ((nf - 1.0) * cot)));
            }
        }
        // integrands are trigonometric polynomials of degree at most N + n
        let panels = 2 * (big_n + n) + 2;
        let moments = DVector::from_fn(m, |k, _| {
            let weight = |t: f64| t.sin().powi(n as i32 - 1);
            integrate_panels(|t| (k as f64 * t).cos() * weight(t), 0.0, PI, panels)
        });
        let weights = (inv.transpose() * moments).iter().copied().collect();
        Ok(RadialGrid {
            kind,
            n,
            theta,
            d1,
            d2,
            lap,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn is_pole(&self, j: usize) -> bool {
        j == 0 || j + 1 == self.len()
    }

    /// `∫_{𝕊ⁿ} φ / Vol(𝕊ⁿ)` for a zonal `φ`.
    pub fn mean(&self, phi: &[f64]) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.weights
            .iter()
            .zip(phi)
            .map(|(w, p)| w * p)
            .sum::<f64>()
            / total
    }
}

/// Moves each row's sum onto its diagonal so constants differentiate to zero exactly.
fn exact_on_constants(mut d: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..d.nrows() {
        let s: f64 = d.row(i).sum();
        d[(i, i)] -= s;
    }
    d
}

/// Chebyshev differentiation matrix on `x_j = cos(jπ/N)`.
fn chebyshev_matrix(x: &[f64]) -> DMatrix<f64> {
    let m = x.len();
    let big_n = m - 1;
    let c = |j: usize| {
        let base = if j == 0 || j == big_n { 2.0 } else { 1.0 };
        if j % 2 == 0 {
            base
        } else {
            -base
        }
    };
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
    }
    // negative-sum trick for the diagonal
    for i in 0..m {
        let s: f64 = (0..m).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -s;
    }
    d
}
