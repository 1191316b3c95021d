use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H0Spectrum {
    /// lowest eigenvalues by real part
    pub eigenvalues: Vec<f64>,
    /// largest imaginary part among the reported eigenvalues
    pub max_imaginary: f64,
    pub nonpositive_count: usize,
    /// eigenvector of the lowest eigenvalue, scaled to unit max-norm
    pub lowest_vector: Vec<f64>,
    /// `max - min` of `lowest_vector`
    pub lowest_spread: f64,
}

/// The linearisation at `u ≡ 1` of the `t = 0` semilinear equation,
/// `φ ↦ -Δφ - 2 ⨍φ`, on zonal functions.
pub fn h0_linearization(grid: &RadialGrid) -> DMatrix<f64> {
    let m = grid.len();
    let total: f64 = grid.weights.iter().sum();
    DMatrix::from_fn(m, m, |i, j| {
        -grid.lap[(i, j)] - 2.0 * grid.weights[j] / total
    })
}

/// Lowest `count` eigenvalues of [`h0_linearization`] and the eigenvector of
/// the lowest one.
pub fn linearized_h0_spectrum(grid: &RadialGrid, count: usize) -> Result<H0Spectrum> {
    let l = h0_linearization(grid);
    let mut eigs: Vec<(f64, f64)> = l
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re, z.im))
        .collect();
    eigs.sort_by(|a, b| a.0.total_cmp(&b.0));
    eigs.truncate(count.max(1));
    let lowest = eigs[0].0;
    let nonpositive_count = eigs.iter().filter(|e| e.0 <= 0.0).count();
    let max_imaginary = eigs.iter().fold(0.0f64, |m, e| m.max(e.1.abs()));

    // inverse iteration with a slightly shifted pole
    let m = grid.len();
    let shift = lowest - 1e-8 * (1.0 + lowest.abs());
    let lu = (&l - DMatrix::identity(m, m) * shift).lu();
    let mut v = DVector::from_fn(m, |j, _| 1.0 + 0.1 * (j as f64 + 1.0).sin());
    for _ in 0..20 {
        v = lu
            .solve(&v)
            .ok_or_else(|| Error::Numerical("singular shifted operator".into()))?;
        let scale = v.amax();
        v /= scale;
    }
    if v.iter().sum::<f64>() < 0.0 {
        v = -v;
    }
    let lowest_vector: Vec<f64> = v.iter().copied().collect();
    let lowest_spread = lowest_vector
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        - lowest_vector.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(H0Spectrum {
        eigenvalues: eigs.iter().map(|e| e.0).collect(),
        max_imaginary,
        nonpositive_count,
        lowest_vector,
        lowest_spread,
    })
}
