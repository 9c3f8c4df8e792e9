//! Central tolerance table.
//!
//! Every numeric threshold used by the solvers, the metric reconstruction,
//! and the verification checks is named here once; call sites and tests
//! reference these constants instead of restating literals.

/// Root acceptance for the soliton-constant solves, relative to the local
/// scale of the bracketing function.
pub const TOL_ROOT: f64 = 1e-12;

/// Relative truncation threshold for the small-phi series branch and the
/// closing series tail.
pub const TOL_SERIES: f64 = 1e-16;

/// Required relative agreement between the series branch and the closed form
/// in the overlap window around the branch switch.
pub const TOL_BRANCH: f64 = 1e-9;

/// Per-interval absolute error target for the adaptive grid quadratures.
pub const TOL_QUAD: f64 = 1e-13;

/// Acceptance for the monotone grid inverse: |r(phi_of_r(r)) - r|.
pub const TOL_INV: f64 = 1e-10;

/// Absolute bound for the profile-equation residual on verification grids.
pub const TOL_ODE_RESIDUAL: f64 = 1e-10;

/// Relative deviation bound for the independent adaptive-integration oracle.
pub const TOL_ODE_ORACLE: f64 = 1e-6;

/// Uniform step in r used by the flow-reduction finite-difference check.
pub const Q_REDUCTION_R_STEP: f64 = 1e-3;

/// Bound for the flow-reduction check; the centered difference has O(h^2)
/// truncation, so the bound scales with the square of the r step.
pub fn tol_q_reduction(r_step: f64) -> f64 {
    10.0 * r_step * r_step
}

/// Relative bound for the float path of the antiderivative identity
/// (the rational path must vanish exactly).
pub const TOL_IDENTITY: f64 = 1e-12;

/// Absolute residual bound for the transformed-profile cross-check.
pub const TOL_FIK: f64 = 1e-9;

/// Post-solve closing assertion |F(b1)| for the compact case.
pub const TOL_CLOSING_F: f64 = 1e-10;

/// Post-solve closing assertion |F'(b1) + 1| for the compact case.
pub const TOL_CLOSING_DF: f64 = 1e-8;

/// Relative agreement between the numeric Legendre value and the closed form.
pub const TOL_LEGENDRE: f64 = 1e-10;

/// Relative error allowed on the grid-tail slope fits against the predicted
/// asymptotic rates.
pub const TOL_TAIL_SLOPE: f64 = 1e-3;

/// Relative deviation allowed for the steady-case tail against the inverted
/// asymptotic law.
pub const TOL_STEADY_TAIL: f64 = 1e-4;

/// Relative constancy of (b1 - phi) * e^r over the compact grid tail.
pub const TOL_CLOSING_TAIL: f64 = 1e-4;

/// Relative tolerance handed to the embedded Runge-Kutta oracle stepper.
pub const RK_RTOL: f64 = 1e-10;

/// Absolute tolerance handed to the embedded Runge-Kutta oracle stepper.
pub const RK_ATOL: f64 = 1e-14;
