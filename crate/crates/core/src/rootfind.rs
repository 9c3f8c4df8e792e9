//! Safeguarded scalar root finding.
//!
//! A bracketing scan plus a secant/bisection hybrid. The hybrid never leaves
//! the bracket, so convergence is guaranteed once a sign change is in hand;
//! the secant step just accelerates the endgame.

use crate::error::{Error, Result};

/// Geometric scan for a sign change of f, starting at `start` and multiplying
/// by `ratio` each step. Returns the bracketing pair (a, b) with a < b.
pub fn scan_for_sign_change<F>(mut f: F, start: f64, ratio: f64, max_steps: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    if !(start > 0.0) || !(ratio > 1.0) {
        return Err(Error::InvalidParameter(
            "sign-change scan needs start > 0 and ratio > 1".into(),
        ));
    }
    let mut a = start;
    let mut fa = f(a);
    if !fa.is_finite() {
        return Err(Error::SolverFailure(format!(
            "scan function not finite at start {a}"
        )));
    }
    for _ in 0..max_steps {
        let b = a * ratio;
        let fb = f(b);
        if !fb.is_finite() {
            return Err(Error::SolverFailure(format!(
                "scan function not finite at {b}"
            )));
        }
        if fa == 0.0 {
            return Ok((a, a));
        }
        if fa.signum() != fb.signum() || fb == 0.0 {
            return Ok((a, b));
        }
        a = b;
        fa = fb;
    }
    Err(Error::SolverFailure(format!(
        "no sign change found after {max_steps} geometric steps from {start}"
    )))
}

/// Hybrid secant/bisection solve on a bracket [a, b] with f(a) and f(b) of
/// opposite sign. Converges to relative width `tol` on the root.
pub fn solve_bracketed<F>(mut f: F, a: f64, b: f64, tol: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidParameter(format!(
            "invalid bracket [{a}, {b}]"
        )));
    }
    let mut lo = a;
    let mut hi = b;
    let mut flo = f(lo);
    let mut fhi = f(hi);
    if !(flo.is_finite() && fhi.is_finite()) {
        return Err(Error::SolverFailure(
            "bracket endpoints do not evaluate to finite values".into(),
        ));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::SolverFailure(format!(
            "no sign change on bracket [{a}, {b}]"
        )));
    }
    for _ in 0..max_iter {
        let width = hi - lo;
        let mid = 0.5 * (lo + hi);
        if width <= tol * mid.abs().max(1.0) {
            return Ok(mid);
        }
        // Secant candidate, clamped away from the endpoints so a stalled
        // secant cannot prevent the bracket from shrinking.
        let guard = 0.01 * width;
        let mut x = lo - flo * width / (fhi - flo);
        if !x.is_finite() || x < lo + guard || x > hi - guard {
            x = mid;
        }
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::SolverFailure(format!(
                "function not finite at {x} during bracketed solve"
            )));
        }
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == flo.signum() {
            lo = x;
            flo = fx;
        } else {
            hi = x;
            fhi = fx;
        }
    }
    Err(Error::SolverFailure(format!(
        "bracketed solve did not converge within {max_iter} iterations"
    )))
}

/// A few secant refinements from two nearby iterates, keeping the visited
/// point with the smallest |f|. Polishes a root past the bracketing
/// tolerance when the caller needs a tiny residual, not just a tight
/// bracket.
pub fn secant_polish<F>(mut f: F, x0: f64, x1: f64, iters: usize) -> f64
where
    F: FnMut(f64) -> f64,
{
    let mut a = x0;
    let mut b = x1;
    let mut fa = f(a);
    let mut fb = f(b);
    let mut best = if fa.abs() <= fb.abs() { a } else { b };
    let mut best_val = fa.abs().min(fb.abs());
    for _ in 0..iters {
        if fb == fa {
            break;
        }
        let c = b - fb * (b - a) / (fb - fa);
        if !c.is_finite() {
            break;
        }
        let fc = f(c);
        if !fc.is_finite() {
            break;
        }
        if fc.abs() < best_val {
            best_val = fc.abs();
            best = c;
        }
        a = b;
        fa = fb;
        b = c;
        fb = fc;
        if fc == 0.0 {
            break;
        }
    }
    best
}
