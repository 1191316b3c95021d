//! Rotationally symmetric Newton–continuation on the round sphere.
//!
//! Zonal conformal factors `u(θ)` are discretised on a polar-angle grid.
//! Three equation families are supported: the subcritical curvature
//! equation in `s`, its cone homotopy in `t` down to the scalar-curvature
//! case, and the semilinear family joining a mean-field problem to the
//! Yamabe equation.

mod grid;
mod margins;
mod newton;
mod radial;
mod spectrum;

pub use grid::{GridKind, RadialGrid};
pub use margins::{apriori_margins, transcript, MarginReport, TranscriptRow, DEFAULT_MARGIN_FLOOR};
pub use newton::{
    newton_continuation, newton_solve, ContinuationFailure, ContinuationState, MarginRecord,
    NewtonOptions, NewtonOutcome, PathKind, Schedule, MIN_STEP,
};
pub use radial::{
    h1_rescaling, ht_residual, radial_schouten_eigs, residual_fs, ricci_floor, zonal_eigenvalues,
    Family, NodeData, RadialProblem, RadialProfile,
};
pub use spectrum::{h0_linearization, linearized_h0_spectrum, H0Spectrum};
