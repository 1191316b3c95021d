//! Numerical toolkit for fully nonlinear Yamabe-type equations
//! `f(λ(A_{g_u})) = ψ u^{-s}` with `f = σ_k^{1/k}` on Gårding cones.
//!
//! * [`cones`]: elementary symmetric functions, `Γ_k`, margins, `μ⁺`, and
//!   the cone homotopy `(f_t, Γ_t)`.
//! * [`conformal`]: Schouten and Ricci tensors of metrics and conformal
//!   metrics on charts, eigenvalues relative to a metric.
//! * [`bubbles`]: the standard bubbles `U_{a,p}` and blow-up rescalings.
//! * [`barriers`]: explicit sub- and super-solutions and their sweeps.
//! * [`comparison`]: Hawking-type distance bound, model ball volumes,
//!   Bishop–Gromov ratios.
//! * [`solver`]: radial Newton continuation on the round sphere.

pub mod barriers;
pub mod bubbles;
pub mod comparison;
pub mod cones;
pub mod conformal;
pub mod error;
pub mod expr;
pub mod jet;
pub mod quad;
pub mod solver;

pub use error::{Error, Result};
