use nalgebra::DMatrix;

use super::eigen::eigen_rel;
use super::factor::{ConformalFactor, FactorJet};
use super::metric::{MetricField, MetricJet};
use crate::error::{Error, Result};

/// Christoffel symbols of the second kind and their first derivatives.
pub struct Christoffel {
    n: usize,
    /// `Γ^k_ij` at `k*n*n + i*n + j`
    gamma: Vec<f64>,
    /// `∂_l Γ^k_ij` at `((l*n + k)*n + i)*n + j`; empty when not requested
    dgamma: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.gamma[(k * n + i) * n + j]
    }

    fn d(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        let n = self.n;
        self.dgamma[((l * n + k) * n + i) * n + j]
    }
}

pub(crate) fn inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    g.clone()
        .try_inverse()
        .ok_or_else(|| Error::Numerical("singular metric".into()))
}

pub fn christoffel(mj: &MetricJet, with_derivatives: bool) -> Result<Christoffel> {
    let n = mj.g.nrows();
    let ginv = inverse(&mj.g)?;
    let first = |m: usize, i: usize, j: usize| {
        0.5 * (mj.dg[i][(j, m)] + mj.dg[j][(i, m)] - mj.dg[m][(i, j)])
    };
    let mut gamma = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                gamma[(k * n + i) * n + j] = (0..n).map(|m| ginv[(k, m)] * first(m, i, j)).sum();
            }
        }
    }
    let mut dgamma = Vec::new();
    if with_derivatives {
        dgamma = vec![0.0; n * n * n * n];
        for l in 0..n {
            let dginv = -(&ginv * &mj.dg[l] * &ginv);
            let dfirst = |m: usize, i: usize, j: usize| {
                0.5 * (mj.ddg[l][i][(j, m)] + mj.ddg[l][j][(i, m)] - mj.ddg[l][m][(i, j)])
            };
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        dgamma[((l * n + k) * n + i) * n + j] = (0..n)
                            .map(|m| {
                                dginv[(k, m)] * first(m, i, j) + ginv[(k, m)] * dfirst(m, i, j)
                            })
                            .sum();
                    }
                }
            }
        }
    }
    Ok(Christoffel { n, gamma, dgamma })
}

/// Ricci tensor assembled directly from metric derivatives.
pub fn ricci_from_jet(mj: &MetricJet) -> Result<DMatrix<f64>> {
    let n = mj.g.nrows();
    let c = christoffel(mj, true)?;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let mut r = 0.0;
        for k in 0..n {
            r += c.d(k, k, i, j) - c.d(j, k, i, k);
            for p in 0..n {
                r += c.get(k, k, p) * c.get(p, i, j) - c.get(k, j, p) * c.get(p, i, k);
            }
        }
        r
    })
    .symmetric_part())
}

trait SymPart {
    fn symmetric_part(self) -> Self;
}

impl SymPart for DMatrix<f64> {
    fn symmetric_part(self) -> Self {
        (&self + self.transpose()) * 0.5
    }
}

/// `tr_g B = g^{ij} B_ij`.
pub fn trace_rel(b: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    Ok(inverse(g)?.component_mul(b).sum())
}

fn schouten_from_ricci(ric: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = g.nrows() as f64;
    let r = trace_rel(ric, g)?;
    Ok((ric - g * (r / (2.0 * (n - 1.0)))) / (n - 2.0))
}

/// Ricci tensor of `g` at `x`.
pub fn ricci_background(g: &MetricField, x: &[f64]) -> Result<DMatrix<f64>> {
    ricci_from_jet(&g.jet(x)?)
}

/// Scalar curvature of `g` at `x`.
pub fn scalar_curvature(g: &MetricField, x: &[f64]) -> Result<f64> {
    let mj = g.jet(x)?;
    trace_rel(&ricci_from_jet(&mj)?, &mj.g)
}

/// `A_g = (Ric - R g / (2(n-1))) / (n-2)` from the metric's derivatives.
pub fn schouten_background(g: &MetricField, x: &[f64]) -> Result<DMatrix<f64>> {
    let mj = g.jet(x)?;
    schouten_from_ricci(&ricci_from_jet(&mj)?, &mj.g)
}

/// `∇²u = ∂²u - Γ^k ∂_k u`.
pub fn covariant_hessian(c: &Christoffel, fj: &FactorJet) -> DMatrix<f64> {
    let n = fj.du.len();
    DMatrix::from_fn(n, n, |i, j| {
        fj.ddu[(i, j)] - (0..n).map(|k| c.get(k, i, j) * fj.du[k]).sum::<f64>()
    })
}

/// `Δ_g u = tr_g ∇²u`.
pub fn laplacian(g: &MetricField, u: &ConformalFactor, x: &[f64]) -> Result<f64> {
    let mj = g.jet(x)?;
    let c = christoffel(&mj, false)?;
    let fj = u.field_jet(x)?;
    trace_rel(&covariant_hessian(&c, &fj), &mj.g)
}

/// Schouten tensor of `g_u = u^{4/(n-2)} g` at `x`, with Hessians taken
/// covariantly with respect to `g`.
pub fn schouten_conformal(g: &MetricField, u: &ConformalFactor, x: &[f64]) -> Result<DMatrix<f64>> {
    let mj = g.jet(x)?;
    let fj = u.jet(x)?;
    schouten_conformal_parts(g, &mj, &fj)
}

pub(crate) fn schouten_conformal_parts(
    g: &MetricField,
    mj: &MetricJet,
    fj: &FactorJet,
) -> Result<DMatrix<f64>> {
    let n = mj.g.nrows();
    let nf = n as f64;
    let c = christoffel(mj, false)?;
    let hess = covariant_hessian(&c, fj);
    let ag = match g.known_schouten(&mj.g) {
        Some(a) => a,
        None => schouten_from_ricci(&ricci_from_jet(mj)?, &mj.g)?,
    };
    let u = fj.u;
    let du2 = (fj.du.transpose() * inverse(&mj.g)? * &fj.du)[(0, 0)];
    let dudu = &fj.du * fj.du.transpose();
    let a = hess * (-2.0 / ((nf - 2.0) * u)) + dudu * (2.0 * nf / ((nf - 2.0).powi(2) * u * u))
        - &mj.g * (2.0 * du2 / ((nf - 2.0).powi(2) * u * u))
        + ag;
    Ok(a.symmetric_part())
}

/// `g_u` at `x`.
pub fn conformal_metric_at(
    g: &MetricField,
    u: &ConformalFactor,
    x: &[f64],
) -> Result<DMatrix<f64>> {
    let n = g.n as f64;
    let w = u.jet(x)?.u.powf(4.0 / (n - 2.0));
    Ok(g.metric_at(x)? * w)
}

/// `Ric_{g_u} = (n-2) A_{g_u} + tr_{g_u}(A_{g_u}) g_u`.
pub fn ricci_conformal(g: &MetricField, u: &ConformalFactor, x: &[f64]) -> Result<DMatrix<f64>> {
    let n = g.n as f64;
    let a = schouten_conformal(g, u, x)?;
    let gu = conformal_metric_at(g, u, x)?;
    let tr = trace_rel(&a, &gu)?;
    Ok(a * (n - 2.0) + gu * tr)
}

/// Minimum over `samples` of the smallest eigenvalue of
/// `Ric_{g_u} + (n-1)α² g_u` relative to `g_u`.
///
/// A nonnegative value certifies `Ric_{g_u} ≥ -(n-1)α² g_u` on the samples.
pub fn ricci_lower_margin(
    g: &MetricField,
    u: &ConformalFactor,
    alpha: f64,
    samples: &[Vec<f64>],
) -> Result<f64> {
    let n = g.n as f64;
    let mut worst = f64::INFINITY;
    for x in samples {
        let ric = ricci_conformal(g, u, x)?;
        let gu = conformal_metric_at(g, u, x)?;
        let low = eigen_rel(&ric, &gu)?.min() + (n - 1.0) * alpha * alpha;
        worst = worst.min(low);
    }
    Ok(worst)
}
