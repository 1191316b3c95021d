use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{arg, domain, Result};
use crate::expr::Expr;
use crate::jet::{Jet2, Real};

/// How first and second derivatives of a field are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DerivativeMode {
    /// Exact derivatives by forward-mode jets.
    Analytic,
    /// Central differences with step `h`, optionally Richardson-refined
    /// with `h/2`.
    FiniteDifference { h: f64, richardson: bool },
}

impl DerivativeMode {
    pub const DEFAULT_FD: DerivativeMode = DerivativeMode::FiniteDifference {
        h: 1e-4,
        richardson: false,
    };
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChartDomain {
    Whole,
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl ChartDomain {
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ChartDomain::Whole => true,
            ChartDomain::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
                d2 < radius * radius
            }
            ChartDomain::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(xi, (l, h))| *l < *xi && xi < h),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MetricKind {
    Flat,
    /// Round unit sphere in geodesic normal coordinates about a point.
    SphereNormal,
    /// Round unit sphere as `dθ² + sin²θ g_{𝕊^{n-1}}` in hyperspherical
    /// angles `(θ, φ₁, …, φ_{n-1})`.
    SpherePolar,
    /// `u^{4/(n-2)} g_base`.
    Conformal {
        base: Box<MetricField>,
        factor: Expr,
    },
    /// Row-major component expressions `g_ij`.
    Components(Vec<Expr>),
}

/// A Riemannian metric on a coordinate chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricField {
    pub n: usize,
    pub kind: MetricKind,
    pub mode: DerivativeMode,
    pub domain: ChartDomain,
}

/// Metric components with first and second coordinate derivatives at a point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    /// `dg[k] = ∂_k g`
    pub dg: Vec<DMatrix<f64>>,
    /// `ddg[k][l] = ∂_k ∂_l g`
    pub ddg: Vec<Vec<DMatrix<f64>>>,
}

fn check_dim(n: usize) -> Result<()> {
    if n < 3 {
        return arg(format!("dimension n = {n} must be at least 3"));
    }
    Ok(())
}

impl MetricField {
    pub fn flat(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(MetricField {
            n,
            kind: MetricKind::Flat,
            mode: DerivativeMode::Analytic,
            domain: ChartDomain::Whole,
        })
    }

    pub fn sphere_normal(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(MetricField {
            n,
            kind: MetricKind::SphereNormal,
            mode: DerivativeMode::Analytic,
            domain: ChartDomain::Ball {
                center: vec![0.0; n],
                radius: std::f64::consts::PI,
            },
        })
    }

    pub fn sphere_polar(n: usize) -> Result<Self> {
        use std::f64::consts::PI;
        check_dim(n)?;
        let mut lo = vec![0.0; n];
        let mut hi = vec![PI; n];
        lo[n - 1] = -PI;
        hi[n - 1] = PI;
        Ok(MetricField {
            n,
            kind: MetricKind::SpherePolar,
            mode: DerivativeMode::Analytic,
            domain: ChartDomain::Box { lo, hi },
        })
    }

    pub fn conformal(base: MetricField, factor: Expr) -> Self {
        MetricField {
            n: base.n,
            mode: base.mode,
            domain: base.domain.clone(),
            kind: MetricKind::Conformal {
                base: Box::new(base),
                factor,
            },
        }
    }

    pub fn components(n: usize, comps: Vec<Expr>, domain: ChartDomain) -> Result<Self> {
        check_dim(n)?;
        if comps.len() != n * n {
            return arg(format!(
                "expected {} metric components, got {}",
                n * n,
                comps.len()
            ));
        }
        Ok(MetricField {
            n,
            kind: MetricKind::Components(comps),
            mode: DerivativeMode::Analytic,
            domain,
        })
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    /// Row-major components at `x`, over any scalar type.
    pub fn eval_components<S: Real>(&self, x: &[S]) -> Vec<S> {
        let n = self.n;
        match &self.kind {
            MetricKind::Flat => (0..n * n)
                .map(|k| S::cst(if k / n == k % n { 1.0 } else { 0.0 }))
                .collect(),
            MetricKind::SphereNormal => {
                let mut rho = S::cst(0.0);
                for xi in x {
                    rho = rho + xi.clone() * xi.clone();
                }
                let s = apply_series(&rho, sinc_sq_coeff);
                let q = apply_series(&rho, normal_defect_coeff);
                let mut out = Vec::with_capacity(n * n);
                for i in 0..n {
                    for j in 0..n {
                        let mut c = q.clone() * x[i].clone() * x[j].clone();
                        if i == j {
                            c = c + s.clone();
                        }
                        out.push(c);
                    }
                }
                out
            }
            MetricKind::SpherePolar => {
                let mut diag = Vec::with_capacity(n);
                let mut w = S::cst(1.0);
                diag.push(w.clone());
                for i in 1..n {
                    let s = x[i - 1].sin();
                    w = w * s.clone() * s;
                    diag.push(w.clone());
                }
                (0..n * n)
                    .map(|k| {
                        if k / n == k % n {
                            diag[k / n].clone()
                        } else {
                            S::cst(0.0)
                        }
                    })
                    .collect()
            }
            MetricKind::Conformal { base, factor } => {
                let w = factor.eval(x).powf(4.0 / (n as f64 - 2.0));
                base.eval_components(x)
                    .into_iter()
                    .map(|c| c * w.clone())
                    .collect()
            }
            MetricKind::Components(comps) => comps.iter().map(|e| e.eval(x)).collect(),
        }
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        Ok(DMatrix::from_row_slice(
            self.n,
            self.n,
            &self.eval_components(x),
        ))
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return arg(format!(
                "point has {} coordinates, chart has {}",
                x.len(),
                self.n
            ));
        }
        if !self.domain.contains(x) {
            return domain(format!("point {x:?} outside the chart domain"));
        }
        Ok(())
    }

    /// Components and their first two derivatives at `x`.
    pub fn jet(&self, x: &[f64]) -> Result<MetricJet> {
        self.check_point(x)?;
        let n = self.n;
        match self.mode {
            DerivativeMode::Analytic => {
                let comps = self.eval_components(&Jet2::point(x));
                let g = DMatrix::from_fn(n, n, |i, j| comps[i * n + j].value());
                let dg = (0..n)
                    .map(|k| DMatrix::from_fn(n, n, |i, j| comps[i * n + j].grad(k)))
                    .collect();
                let ddg = (0..n)
                    .map(|k| {
                        (0..n)
                            .map(|l| DMatrix::from_fn(n, n, |i, j| comps[i * n + j].hess(k, l)))
                            .collect()
                    })
                    .collect();
                Ok(MetricJet { g, dg, ddg })
            }
            DerivativeMode::FiniteDifference { h, richardson } => {
                let d = fd_derivatives(|p| self.eval_components(p), x, h, richardson);
                let m = |v: &Vec<f64>| DMatrix::from_row_slice(n, n, v);
                Ok(MetricJet {
                    g: m(&d.value),
                    dg: d.d1.iter().map(m).collect(),
                    ddg: d.d2.iter().map(|row| row.iter().map(m).collect()).collect(),
                })
            }
        }
    }

    /// Closed-form Schouten tensor for builtins whose curvature is known.
    pub(crate) fn known_schouten(&self, g: &DMatrix<f64>) -> Option<DMatrix<f64>> {
        match self.kind {
            MetricKind::Flat => Some(DMatrix::zeros(self.n, self.n)),
            MetricKind::SphereNormal | MetricKind::SpherePolar => Some(g * 0.5),
            _ => None,
        }
    }
}

/// Vector-valued values with central-difference first and second derivatives.
pub(crate) struct FdDerivatives {
    pub value: Vec<f64>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<Vec<f64>>>,
}

pub(crate) fn fd_derivatives<F>(f: F, x: &[f64], h: f64, richardson: bool) -> FdDerivatives
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let raw = |h: f64| fd_raw(&f, x, h);
    if !richardson {
        return raw(h);
    }
    let coarse = raw(h);
    let fine = raw(0.5 * h);
    let extrap = |c: &[f64], f: &[f64]| -> Vec<f64> {
        c.iter().zip(f).map(|(c, f)| (4.0 * f - c) / 3.0).collect()
    };
    FdDerivatives {
        value: fine.value.clone(),
        d1: coarse
            .d1
            .iter()
            .zip(&fine.d1)
            .map(|(c, f)| extrap(c, f))
            .collect(),
        d2: coarse
            .d2
            .iter()
            .zip(&fine.d2)
            .map(|(cr, fr)| cr.iter().zip(fr).map(|(c, f)| extrap(c, f)).collect())
            .collect(),
    }
}

fn fd_raw<F>(f: &F, x: &[f64], h: f64) -> FdDerivatives
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let at = |shifts: &[(usize, f64)]| {
        let mut p = x.to_vec();
        for &(i, d) in shifts {
            p[i] += d;
        }
        f(&p)
    };
    let value = f(x);
    let m = value.len();
    let comb = |terms: &[(f64, &Vec<f64>)]| -> Vec<f64> {
        (0..m)
            .map(|c| terms.iter().map(|(w, v)| w * v[c]).sum())
            .collect()
    };
    let plus: Vec<Vec<f64>> = (0..n).map(|k| at(&[(k, h)])).collect();
    let minus: Vec<Vec<f64>> = (0..n).map(|k| at(&[(k, -h)])).collect();
    let d1 = (0..n)
        .map(|k| comb(&[(0.5 / h, &plus[k]), (-0.5 / h, &minus[k])]))
        .collect();
    let mut d2 = vec![vec![Vec::new(); n]; n];
    for k in 0..n {
        d2[k][k] = comb(&[
            (1.0 / (h * h), &plus[k]),
            (-2.0 / (h * h), &value),
            (1.0 / (h * h), &minus[k]),
        ]);
        for l in k + 1..n {
            let pp = at(&[(k, h), (l, h)]);
            let pm = at(&[(k, h), (l, -h)]);
            let mp = at(&[(k, -h), (l, h)]);
            let mm = at(&[(k, -h), (l, -h)]);
            let w = 0.25 / (h * h);
            let v = comb(&[(w, &pp), (-w, &pm), (-w, &mp), (w, &mm)]);
            d2[k][l] = v.clone();
            d2[l][k] = v;
        }
    }
    FdDerivatives { value, d1, d2 }
}

/// Taylor coefficient `m` of `sin²(√ρ)/ρ`.
fn sinc_sq_coeff(m: usize) -> f64 {
    // (-1)^m 4^{m+1} / (2 (2m+2)!)
    let mut c = 1.0;
    for j in 1..=m {
        c *= -4.0 / (((2 * j + 1) * (2 * j + 2)) as f64);
    }
    c
}

/// Taylor coefficient `m` of `(1 - sin²(√ρ)/ρ)/ρ`.
fn normal_defect_coeff(m: usize) -> f64 {
    let mut c = 1.0 / 3.0;
    for j in 1..=m {
        c *= -4.0 / (((2 * j + 3) * (2 * j + 4)) as f64);
    }
    c
}

const SERIES_TERMS: usize = 48;

/// Evaluates an entire power series at a scalar, propagating derivatives.
fn apply_series<S: Real>(rho: &S, coeff: fn(usize) -> f64) -> S {
    let r = rho.val();
    let (mut f0, mut f1, mut f2) = (0.0, 0.0, 0.0);
    for m in (0..SERIES_TERMS).rev() {
        let c = coeff(m);
        // Horner on value and derivatives simultaneously
        f2 = f2 * r + 2.0 * f1;
        f1 = f1 * r + f0;
        f0 = f0 * r + c;
    }
    rho.chain(f0, f1, f2)
}
