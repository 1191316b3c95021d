use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::metric::{fd_derivatives, ChartDomain, DerivativeMode};
use crate::error::{arg, domain, Result};
use crate::expr::Expr;
use crate::jet::Jet2;

/// A positive conformal factor `u` on a chart.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConformalFactor {
    pub n: usize,
    pub expr: Expr,
    pub mode: DerivativeMode,
    pub domain: ChartDomain,
}

/// `u`, `∂u` and `∂²u` at a point.
#[derive(Clone, Debug)]
pub struct FactorJet {
    pub u: f64,
    pub du: DVector<f64>,
    pub ddu: DMatrix<f64>,
}

impl ConformalFactor {
    pub fn new(n: usize, expr: Expr) -> Self {
        ConformalFactor {
            n,
            expr,
            mode: DerivativeMode::Analytic,
            domain: ChartDomain::Whole,
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(n, Expr::c(c))
    }

    pub fn with_mode(mut self, mode: DerivativeMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_domain(mut self, domain: ChartDomain) -> Self {
        self.domain = domain;
        self
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.expr.eval(x)
    }

    /// Pointwise product `u·v` (analytic mode).
    pub fn product(&self, other: &ConformalFactor) -> ConformalFactor {
        ConformalFactor::new(self.n, self.expr.clone() * other.expr.clone())
            .with_domain(self.domain.clone())
    }

    /// Value and derivatives at `x`; requires `u(x) > 0`.
    pub fn jet(&self, x: &[f64]) -> Result<FactorJet> {
        let jet = self.field_jet(x)?;
        if !(jet.u > 0.0) {
            return domain(format!(
                "conformal factor is not positive at {x:?} (u = {})",
                jet.u
            ));
        }
        Ok(jet)
    }

    /// Value and derivatives at `x` without the positivity requirement.
    pub fn field_jet(&self, x: &[f64]) -> Result<FactorJet> {
        if x.len() != self.n {
            return arg(format!(
                "point has {} coordinates, factor has {}",
                x.len(),
                self.n
            ));
        }
        if !self.domain.contains(x) {
            return domain(format!("point {x:?} outside the factor's domain"));
        }
        let n = self.n;
        Ok(match self.mode {
            DerivativeMode::Analytic => {
                let j = self.expr.eval(&Jet2::point(x));
                FactorJet {
                    u: j.value(),
                    du: DVector::from_fn(n, |i, _| j.grad(i)),
                    ddu: DMatrix::from_fn(n, n, |i, k| j.hess(i, k)),
                }
            }
            DerivativeMode::FiniteDifference { h, richardson } => {
                let d = fd_derivatives(|p| vec![self.expr.eval(p)], x, h, richardson);
                FactorJet {
                    u: d.value[0],
                    du: DVector::from_fn(n, |i, _| d.d1[i][0]),
                    ddu: DMatrix::from_fn(n, n, |i, k| d.d2[i][k][0]),
                }
            }
        })
    }
}
