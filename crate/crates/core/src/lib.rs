//! Construction and verification of rotationally symmetric shrinking,
//! steady, and expanding Kahler-Ricci soliton profiles on line-bundle
//! total spaces over a Kahler-Einstein base, together with the compact
//! shrinking profile on the projective compactification.
//!
//! The profile function comes from a closed-form solution of a first-order
//! linear ODE; everything downstream (soliton-constant solves, metric grid,
//! asymptotics, residual checks, Calabi-ansatz quotient potentials) is exact
//! or controlled-precision numerics on top of that closed form.

// Validation sites write `!(x > 0.0)` rather than `x <= 0.0` on purpose: the
// negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod metric;
pub mod profile;
pub mod quad;
pub mod quotient;
pub mod rk;
pub mod rootfind;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
pub use exact::{Geometry, Rational, RationalPoly};
pub use metric::{
    AsymptoticData, ClosingData, GridConfig, GridRow, MetricEigenvalues, ProfileGrid,
    PullbackSample,
};
pub use profile::{ClosingSeries, EvalBranch, SolitonCase, SolitonProfile};
pub use verify::ResidualReport;
