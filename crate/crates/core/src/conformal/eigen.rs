use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{arg, domain, Result};

/// Eigenvalues of a symmetric form relative to a metric, ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenvalueVector(Vec<f64>);

impl EigenvalueVector {
    pub fn from_unsorted(mut v: Vec<f64>) -> Self {
        v.sort_by(f64::total_cmp);
        EigenvalueVector(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.0.last().copied().unwrap_or(f64::NAN)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_unsorted(self.0.iter().map(|v| v * c).collect())
    }
}

/// Solves `A v = λ g v` by Cholesky reduction `g = L Lᵀ` to the standard
/// symmetric problem for `L⁻¹ A L⁻ᵀ`.
pub fn eigen_rel(a: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<EigenvalueVector> {
    if a.shape() != g.shape() || !a.is_square() {
        return arg(format!(
            "shape mismatch: {:?} vs {:?}",
            a.shape(),
            g.shape()
        ));
    }
    let Some(chol) = g.clone().cholesky() else {
        return domain("metric is not positive definite");
    };
    let l = chol.l();
    let Some(x) = l.solve_lower_triangular(a) else {
        return domain("degenerate Cholesky factor");
    };
    let Some(c) = l.solve_lower_triangular(&x.transpose()) else {
        return domain("degenerate Cholesky factor");
    };
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    Ok(EigenvalueVector::from_unsorted(
        eig.eigenvalues.iter().copied().collect(),
    ))
}
