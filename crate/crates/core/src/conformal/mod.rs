//! Chart-local curvature of metrics and of their conformal deformations
//! `g_u = u^{4/(n-2)} g`.
//!
//! Two independent routes exist. [`ricci_background`] and
//! [`schouten_background`] differentiate the metric components directly
//! (Christoffel symbols and their derivatives). [`schouten_conformal`]
//! applies the conformal transformation law for the Schouten tensor to the
//! background; [`ricci_conformal`] is derived from it through
//! `Ric = (n-2)A + tr_g(A) g`. Feeding a [`MetricKind::Conformal`] metric to
//! the first route gives an oracle for the second.

mod curvature;
mod eigen;
mod factor;
mod metric;

pub use curvature::{
    christoffel, conformal_metric_at, covariant_hessian, laplacian, ricci_background,
    ricci_conformal, ricci_from_jet, ricci_lower_margin, scalar_curvature, schouten_background,
    schouten_conformal, trace_rel, Christoffel,
};
pub use eigen::{eigen_rel, EigenvalueVector};
pub use factor::{ConformalFactor, FactorJet};
pub use metric::{ChartDomain, DerivativeMode, MetricField, MetricJet, MetricKind};

pub(crate) use curvature::schouten_conformal_parts;
