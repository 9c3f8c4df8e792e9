//! Embedded Runge-Kutta integration for scalar first-order problems.
//!
//! A Dormand-Prince 5(4) pair with standard step control. Both directions of
//! travel are supported; the path variant lands exactly on each requested
//! sample point by restarting the stepper segment by segment, which keeps the
//! code free of dense-output machinery at negligible cost for the smooth
//! right-hand sides used here.

use crate::error::{Error, Result};

pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: crate::tolerances::RK_RTOL,
            atol: crate::tolerances::RK_ATOL,
            max_steps: 2_000_000,
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
// Fifth-order solution weights (also the last stage row).
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference to the embedded fourth-order weights.
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

/// Integrate dy/dx = f(x, y) from (x0, y0) to x_end; either direction.
pub fn integrate_scalar<F>(
    f: &mut F,
    x0: f64,
    y0: f64,
    x_end: f64,
    opts: &OdeOptions,
) -> Result<f64>
where
    F: FnMut(f64, f64) -> f64,
{
    let mut steps = 0usize;
    integrate_segment(f, x0, y0, x_end, opts, &mut steps)
}

/// Integrate through a monotone sequence of sample points starting at
/// (x0, y0); returns y at each point. The points must progress in one
/// direction away from x0.
pub fn integrate_path<F>(
    f: &mut F,
    x0: f64,
    y0: f64,
    points: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<f64>>
where
    F: FnMut(f64, f64) -> f64,
{
    let mut out = Vec::with_capacity(points.len());
    let mut x = x0;
    let mut y = y0;
    let mut steps = 0usize;
    for &target in points {
        y = integrate_segment(f, x, y, target, opts, &mut steps)?;
        x = target;
        out.push(y);
    }
    Ok(out)
}

fn integrate_segment<F>(
    f: &mut F,
    x0: f64,
    y0: f64,
    x_end: f64,
    opts: &OdeOptions,
    steps: &mut usize,
) -> Result<f64>
where
    F: FnMut(f64, f64) -> f64,
{
    if !(x0.is_finite() && x_end.is_finite() && y0.is_finite()) {
        return Err(Error::InvalidParameter(
            "integration endpoints and initial value must be finite".into(),
        ));
    }
    if x0 == x_end {
        return Ok(y0);
    }
    let dir = (x_end - x0).signum();
    let span = (x_end - x0).abs();
    let mut x = x0;
    let mut y = y0;
    let mut h = dir * (span * 1e-3).min(1e-2).max(span * f64::EPSILON * 16.0);
    let mut k1 = f(x, y);
    loop {
        *steps += 1;
        if *steps > opts.max_steps {
            return Err(Error::SolverFailure(format!(
                "step budget {} exhausted at x = {x}",
                opts.max_steps
            )));
        }
        // Do not overshoot the target.
        if (x + h - x_end) * dir > 0.0 {
            h = x_end - x;
        }
        let k2 = f(x + C2 * h, y + h * (A21 * k1));
        let k3 = f(x + C3 * h, y + h * (A31 * k1 + A32 * k2));
        let k4 = f(x + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(
            x + C5 * h,
            y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
        );
        let k6 = f(
            x + h,
            y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        );
        let y_new = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = f(x + h, y_new);
        let err_raw = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        if !y_new.is_finite() || !err_raw.is_finite() {
            return Err(Error::SolverFailure(format!(
                "non-finite state during integration near x = {x}"
            )));
        }
        let scale = opts.atol + opts.rtol * y.abs().max(y_new.abs());
        let err = (err_raw / scale).abs();
        if err <= 1.0 {
            x += h;
            y = y_new;
            k1 = k7;
            if (x - x_end) * dir >= 0.0 {
                return Ok(y);
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < (x.abs().max(1.0)) * f64::EPSILON * 4.0 {
            return Err(Error::SolverFailure(format!(
                "step size underflow at x = {x}"
            )));
        }
    }
}
