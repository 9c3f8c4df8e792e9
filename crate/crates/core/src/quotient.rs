//! Potentials for the Calabi-ansatz quotient picture.
//!
//! The upstairs potential on a product of two half-spaces pushes down to a
//! one-variable Legendre-type problem: minimize A e^x + B e^-x - a x over x
//! (in the variable x = log of the fiber coordinate). Both the direct
//! numeric minimization and the closed form are provided, plus the closed
//! form of the degenerate a = 0 limit used by the zero-section potential.

use crate::error::{Error, Result};

/// Upstairs potential pair (e^r1 A + e^-r1 B, e^r1 A - e^-r1 B); the second
/// component is the r1-derivative of the first.
pub fn upstairs_potential(r1: f64, a_coef: f64, b_coef: f64) -> (f64, f64) {
    let ep = r1.exp();
    let em = (-r1).exp();
    (ep * a_coef + em * b_coef, ep * a_coef - em * b_coef)
}

/// Minimum of A e^x + B e^-x - a x via the stationarity condition
/// A e^x - B e^-x = a, solved as a quadratic in e^x. Requires A > 0 and
/// B >= 0; B = 0 degenerates to a log-linear problem that needs a > 0
/// (a = 0 returns 0 by convention, matching the closed form's limit).
pub fn legendre_numeric(a: f64, a_coef: f64, b_coef: f64) -> Result<f64> {
    validate(a, a_coef, b_coef)?;
    if b_coef == 0.0 {
        if a == 0.0 {
            return Ok(0.0);
        }
        // Stationary point e^x = a/A.
        let x = (a / a_coef).ln();
        return Ok(a - a * x);
    }
    // e^x = (a + R)/(2A) with R = sqrt(a^2 + 4AB); for a < 0 the
    // equivalent form 2B/(R - a) avoids cancellation.
    let r = (a * a + 4.0 * a_coef * b_coef).sqrt();
    let ex = if a >= 0.0 {
        (a + r) / (2.0 * a_coef)
    } else {
        2.0 * b_coef / (r - a)
    };
    let x = ex.ln();
    Ok(a_coef * ex + b_coef / ex - a * x)
}

/// Closed form of the same minimum:
/// a log A + R - a log(a + R) + a log 2, R = sqrt(a^2 + 4AB);
/// for a < 0 the middle log is rewritten through
/// log(a + R) = log(4AB) - log(R - a). B = 0 reduces to a - a log(a/A).
pub fn phi_a_closed(a: f64, a_coef: f64, b_coef: f64) -> Result<f64> {
    validate(a, a_coef, b_coef)?;
    if b_coef == 0.0 {
        if a == 0.0 {
            return Ok(0.0);
        }
        return Ok(a - a * (a / a_coef).ln());
    }
    let r = (a * a + 4.0 * a_coef * b_coef).sqrt();
    let log_a_plus_r = if a >= 0.0 {
        (a + r).ln()
    } else {
        (4.0 * a_coef * b_coef).ln() - (r - a).ln()
    };
    Ok(a * a_coef.ln() + r - a * log_a_plus_r + a * 2f64.ln())
}

fn validate(a: f64, a_coef: f64, b_coef: f64) -> Result<()> {
    if !(a.is_finite() && a_coef.is_finite() && b_coef.is_finite()) {
        return Err(Error::InvalidParameter(
            "potential parameters must be finite".into(),
        ));
    }
    if !(a_coef > 0.0) {
        return Err(Error::Domain(format!(
            "leading coefficient must be positive, got {a_coef}"
        )));
    }
    if b_coef < 0.0 {
        return Err(Error::Domain(format!(
            "trailing coefficient must be nonnegative, got {b_coef}"
        )));
    }
    if b_coef == 0.0 && a < 0.0 {
        return Err(Error::Domain(
            "with B = 0 the potential is unbounded below for a < 0".into(),
        ));
    }
    Ok(())
}

/// Zero-section potential 2 sqrt(A_u A_v zeta^2) of the degenerate limit.
pub fn phi0_closed(a_u: f64, a_v: f64, zeta_norm2: f64) -> Result<f64> {
    if !(a_u > 0.0 && a_v > 0.0 && zeta_norm2 >= 0.0) {
        return Err(Error::Domain(format!(
            "zero-section potential needs positive factors, got A_u = {a_u}, A_v = {a_v}, |zeta|^2 = {zeta_norm2}"
        )));
    }
    Ok(2.0 * (a_u * a_v * zeta_norm2).sqrt())
}
