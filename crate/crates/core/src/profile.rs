//! Soliton profile construction.
//!
//! The profile F solves the first-order linear equation
//!
//!   F'(phi) + (d eps/(1 + eps phi) + (n - 1)/phi - mu) F(phi)
//!     = n (1 + eps phi) - tau phi
//!
//! subject to F = phi + O(phi^2) at the zero section. The closed form is
//!
//!   F(phi) = (1 + eps phi)^(-d) phi^(1-n) (nu e^(mu phi) + S(phi)),
//!   S(phi) = sum_k mu^-(k+1) h^(k)(phi),
//!
//! with h the structure polynomial of the geometry and nu pinned by the
//! boundary behaviour at phi = 0. The sign of lambda = tau - n eps selects
//! the shrinking, steady, or expanding regime; the compact regime closes the
//! profile at phi = b1 = (n+1)/lambda.
//!
//! Two evaluation branches cover the domain: below phi_switch the closed
//! form loses all significance to cancellation, so a series in phi built
//! from cancellation-free coefficients takes over; above it the closed form
//! is used directly. A third series, centred at b1, serves the compact
//! metric integrals where 1/F needs full relative accuracy next to the
//! boundary zero.

use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{binomial, horner, Geometry, Rational, RationalPoly};
use crate::rootfind;
use crate::tolerances;

/// Regime of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonCase {
    ShrinkingNoncompact,
    Steady,
    Expanding,
    CompactShrinking,
}

impl fmt::Display for SolitonCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolitonCase::ShrinkingNoncompact => "shrinking_noncompact",
            SolitonCase::Steady => "steady",
            SolitonCase::Expanding => "expanding",
            SolitonCase::CompactShrinking => "compact_shrinking",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for SolitonCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "shrinking_noncompact" => Ok(SolitonCase::ShrinkingNoncompact),
            "steady" => Ok(SolitonCase::Steady),
            "expanding" => Ok(SolitonCase::Expanding),
            "compact_shrinking" => Ok(SolitonCase::CompactShrinking),
            other => Err(Error::InvalidParameter(format!(
                "unknown case '{other}'; expected shrinking_noncompact, steady, expanding, or compact_shrinking"
            ))),
        }
    }
}

/// Noncompact regime implied by the sign of lambda.
pub fn classify_noncompact(g: &Geometry) -> SolitonCase {
    let lambda = g.lambda();
    if lambda.is_zero() {
        SolitonCase::Steady
    } else if lambda.is_positive() {
        SolitonCase::ShrinkingNoncompact
    } else {
        SolitonCase::Expanding
    }
}

/// Structure polynomial h and its full derivative table, exact and as float
/// coefficient arrays. The table is padded with zero polynomials to exactly
/// d + n + 1 entries so index k always means the k-th derivative.
#[derive(Debug, Clone)]
pub struct HTable {
    pub geometry: Geometry,
    pub polys: Vec<RationalPoly>,
    coeffs: Vec<Vec<f64>>,
    pub at_zero_exact: Vec<Rational>,
    pub at_zero: Vec<f64>,
}

impl HTable {
    pub fn new(geometry: Geometry) -> Self {
        let h = geometry.build_h();
        let mut polys = h.derivative_table();
        let full = (geometry.d + geometry.n + 1) as usize;
        while polys.len() < full {
            polys.push(RationalPoly::zero());
        }
        let coeffs: Vec<Vec<f64>> = polys.iter().map(|p| p.coeffs_f64()).collect();
        let at_zero_exact: Vec<Rational> = polys.iter().map(|p| p.coeff(0)).collect();
        let at_zero: Vec<f64> = at_zero_exact
            .iter()
            .map(|c| c.to_f64().expect("derivative value out of f64 range"))
            .collect();
        HTable {
            geometry,
            polys,
            coeffs,
            at_zero_exact,
            at_zero,
        }
    }

    /// Number of table entries, d + n + 1.
    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// h^(k)(phi) in floats.
    pub fn eval(&self, k: usize, phi: f64) -> f64 {
        horner(&self.coeffs[k], phi)
    }

    /// h^(k) at an exact rational point.
    pub fn eval_exact(&self, k: usize, phi: &Rational) -> Rational {
        self.polys[k].eval(phi)
    }
}

/// Decay coefficient nu(mu) = -sum_k h^(k)(0) mu^-(k+1), accumulated from
/// the highest derivative down so the powers never overflow intermediately.
pub fn nu_from_mu(h: &HTable, mu: f64) -> f64 {
    let mut acc = 0.0;
    for k in (0..h.len()).rev() {
        acc = acc / mu + h.at_zero[k];
    }
    -acc / mu
}

/// Exact-rational nu(mu).
pub fn nu_from_mu_exact(h: &HTable, mu: &Rational) -> Rational {
    let mut acc = Rational::zero();
    for k in (0..h.len()).rev() {
        acc = acc / mu + &h.at_zero_exact[k];
    }
    -acc / mu
}

/// Closed-form coefficients C_k, k = n-1 ..= d+n, with
/// -h^(k)(0) = C_k eps^(k-n) when eps > 0:
/// C_k = k! d! / ((k-n+1)! (d+n-k)!) * (n eps (d+1) - tau (k-n+1)).
pub fn ck_coefficients(g: &Geometry) -> Vec<Rational> {
    let d = g.d;
    let n = g.n;
    let n_rat = Rational::from_integer(n.into());
    let d1_rat = Rational::from_integer((d + 1).into());
    (n - 1..=d + n)
        .map(|k| {
            let j = k - (n - 1);
            let comb = crate::exact::factorial(k) * crate::exact::factorial(d);
            let denom = crate::exact::factorial(j) * crate::exact::factorial(d + n - k);
            let shift = Rational::from_integer(j.into());
            let bracket = &n_rat * &g.eps * &d1_rat - &g.tau * shift;
            Rational::new(comb, denom) * bracket
        })
        .collect()
}

/// Number of sign alternations in a sequence, zeros skipped.
pub fn sign_changes(values: &[Rational]) -> usize {
    let mut count = 0;
    let mut last: Option<bool> = None;
    for v in values {
        if v.is_zero() {
            continue;
        }
        let pos = v.is_positive();
        if let Some(prev) = last {
            if prev != pos {
                count += 1;
            }
        }
        last = Some(pos);
    }
    count
}

/// nu(mu) * mu^(d+n+1): a polynomial in mu whose unique positive root is the
/// shrinking soliton constant.
pub fn nu_polynomial(h: &HTable, mu: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..h.len() {
        acc = acc * mu - h.at_zero[k];
    }
    acc
}

/// Solve for the shrinking soliton constant: the unique mu > 0 with
/// nu(mu) = 0. Requires lambda > 0.
pub fn solve_mu_shrinking(g: &Geometry) -> Result<f64> {
    let lambda = g.lambda();
    if !lambda.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "shrinking regime requires lambda > 0, got lambda = {}",
            g.lambda_f64()
        )));
    }
    let h = HTable::new(g.clone());
    solve_mu_shrinking_with(&h)
}

/// Same solve against a prebuilt structure table.
pub fn solve_mu_shrinking_with(h: &HTable) -> Result<f64> {
    let f = |mu: f64| nu_polynomial(h, mu);
    // The objective is negative for mu -> 0+ and eventually positive; walk
    // the start down until the negative side is in hand.
    let mut start = 1e-3;
    for _ in 0..8 {
        if f(start) < 0.0 {
            break;
        }
        start /= 1024.0;
    }
    if f(start) >= 0.0 {
        return Err(Error::SolverFailure(
            "could not bracket the soliton constant from below".into(),
        ));
    }
    let (a, b) = rootfind::scan_for_sign_change(f, start, 2.0, 120)?;
    let root = rootfind::solve_bracketed(f, a, b, tolerances::TOL_ROOT, 300)?;
    let root = rootfind::secant_polish(f, root, root * (1.0 + 1e-8), 6);

    // The defining equation is nu = 0; check it landed.
    let scale: f64 = (0..h.len())
        .map(|k| (h.at_zero[k] * root.powi(-(k as i32 + 1))).abs())
        .sum();
    let nu = nu_from_mu(h, root);
    if nu.abs() > 1e-8 * scale.max(1.0) {
        return Err(Error::Inconsistency(format!(
            "solved mu = {root} leaves nu = {nu}, expected 0"
        )));
    }
    Ok(root)
}

/// Closing integral T(mu) = integral of h(u) e^(-mu u) over [0, b1],
/// evaluated through the derivative table for mu > 0 and through the exact
/// binomial form at mu = 0. Defined for mu >= 0 only.
pub fn closing_integral(h: &HTable, mu: f64) -> Result<f64> {
    let g = &h.geometry;
    let lambda = g.lambda();
    if !lambda.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "closing integral requires lambda > 0, got lambda = {}",
            g.lambda_f64()
        )));
    }
    if !(mu >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "closing integral requires mu >= 0, got {mu}"
        )));
    }
    if mu == 0.0 {
        return Ok(closing_integral_at_zero(g)
            .to_f64()
            .expect("closing integral out of f64 range"));
    }
    let b1 = boundary_value(g);
    let mut acc0 = 0.0;
    let mut accb = 0.0;
    for k in (0..h.len()).rev() {
        acc0 = acc0 / mu + h.at_zero[k];
        accb = accb / mu + h.eval(k, b1);
    }
    Ok((acc0 - (-mu * b1).exp() * accb) / mu)
}

/// T(0) in exact rationals:
/// sum_{k=0}^{d} binom(d,k) eps^k b1^(k+n) k / ((k+n+1)(k+n)).
pub fn closing_integral_at_zero(g: &Geometry) -> Rational {
    let b1 = boundary_rational(g);
    let mut eps_pow = Rational::from_integer(1.into());
    let mut b1_pow = b1.clone();
    for _ in 1..g.n {
        b1_pow *= &b1;
    }
    // b1_pow tracks b1^(k+n) through the loop.
    let mut total = Rational::zero();
    for k in 0..=g.d {
        let weight = Rational::new(
            binomial(g.d, k) * k,
            ((k + g.n + 1) * (k + g.n)).into(),
        );
        total += weight * &eps_pow * &b1_pow;
        eps_pow *= &g.eps;
        b1_pow *= &b1;
    }
    total
}

/// Boundary value b1 = (n+1)/lambda of the compact regime.
pub fn boundary_rational(g: &Geometry) -> Rational {
    Rational::from_integer((g.n + 1).into()) / g.lambda()
}

pub fn boundary_value(g: &Geometry) -> f64 {
    boundary_rational(g)
        .to_f64()
        .expect("boundary value out of f64 range")
}

/// Result of the compact soliton-constant solve.
#[derive(Debug, Clone)]
pub struct CompactSolve {
    pub mu: f64,
    pub b1: f64,
    pub warnings: Vec<String>,
}

/// Solve T(mu) = 0 for the compact shrinking regime. Requires lambda > 0;
/// fails when eps = 0 or d = 0, where T(0) = 0 and T stays negative on
/// (0, infinity), leaving no admissible root.
pub fn solve_mu_compact(g: &Geometry) -> Result<CompactSolve> {
    let lambda = g.lambda();
    if !lambda.is_positive() {
        return Err(Error::InvalidParameter(format!(
            "compact regime requires lambda > 0, got lambda = {}",
            g.lambda_f64()
        )));
    }
    if g.eps.is_zero() || g.d == 0 {
        return Err(Error::SolverFailure(
            "compact closing condition has no positive root when eps = 0 or d = 0".into(),
        ));
    }
    let h = HTable::new(g.clone());
    let b1 = boundary_value(g);
    let f = |mu: f64| closing_integral(&h, mu).unwrap_or(f64::NAN);

    // T(0) > 0 here; find a strictly positive start on the same side, then
    // scan up for the sign change.
    let mut start = 1e-2;
    let mut attempts = 0;
    while f(start) <= 0.0 && attempts < 4 {
        start /= 100.0;
        attempts += 1;
    }
    if f(start) <= 0.0 {
        return Err(Error::SolverFailure(
            "could not find the positive side of the closing condition".into(),
        ));
    }
    let ratio = std::f64::consts::SQRT_2.sqrt();
    let (a, b) = rootfind::scan_for_sign_change(f, start, ratio, 400)?;
    let root = rootfind::solve_bracketed(f, a, b, tolerances::TOL_ROOT, 300)?;
    let mu = rootfind::secant_polish(f, root, root * (1.0 + 1e-8), 6);

    // Diagnostic sweep: the closing condition should cross zero exactly once
    // on (0, 4 mu]; extra crossings are reported, not fatal.
    let mut warnings = Vec::new();
    let lo = (mu * 1e-3).max(1e-9);
    let hi = mu * 4.0;
    let m = 256;
    let mut crossings = 0;
    let mut prev = f(lo);
    for i in 1..=m {
        let x = lo * (hi / lo).powf(i as f64 / m as f64);
        let cur = f(x);
        if prev.is_finite() && cur.is_finite() && prev.signum() != cur.signum() {
            crossings += 1;
        }
        prev = cur;
    }
    if crossings > 1 {
        warnings.push(format!(
            "closing condition changes sign {crossings} times on ({lo:.3e}, {hi:.3e}]; using mu = {mu}"
        ));
    }
    Ok(CompactSolve { mu, b1, warnings })
}

/// Series for the profile about the closing boundary b1 of the compact
/// regime: F(b1 + x) = sum_{j>=1} f_j x^j with f_1 = -1, from the recursion
/// (m+1) f_{m+1} = q_m - sum_{i<m} c_i f_{m-i} where q_0 = -1, q_1 = -lambda
/// and c_i are the Laurent coefficients of the equation's linear term at b1.
/// Valid well inside |x| < b1; used within b1/8.
#[derive(Debug, Clone)]
pub struct ClosingSeries {
    pub b1: f64,
    pub radius: f64,
    /// f_1 .. f_J, coefficients in x = phi - b1.
    pub coeffs: Vec<f64>,
    /// psi_i = (-1)^(i+1) f_(i+1), so F(b1 - delta) = delta * Psi(delta).
    psi: Vec<f64>,
}

impl ClosingSeries {
    pub fn build(g: &Geometry, mu: f64, b1: f64, terms: usize) -> Self {
        let d = g.d as f64;
        let n = g.n as f64;
        let eps = g.eps_f64();
        let lambda = g.lambda_f64();
        let base = 1.0 + eps * b1;
        let mut c = vec![0.0f64; terms];
        for (i, ci) in c.iter_mut().enumerate() {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            *ci = sign
                * (d * eps.powi(i as i32 + 1) / base.powi(i as i32 + 1)
                    + (n - 1.0) / b1.powi(i as i32 + 1));
        }
        c[0] -= mu;
        let mut f = vec![0.0f64; terms + 1];
        f[1] = -1.0;
        for m in 1..terms {
            let q = if m == 1 { -lambda } else { 0.0 };
            let mut conv = 0.0;
            for i in 0..m {
                conv += c[i] * f[m - i];
            }
            f[m + 1] = (q - conv) / (m as f64 + 1.0);
        }
        let coeffs: Vec<f64> = f[1..].to_vec();
        let psi: Vec<f64> = coeffs
            .iter()
            .enumerate()
            .map(|(i, fj)| if i % 2 == 0 { -fj } else { *fj })
            .collect();
        ClosingSeries {
            b1,
            radius: b1 / 8.0,
            coeffs,
            psi,
        }
    }

    pub fn in_range(&self, phi: f64) -> bool {
        (self.b1 - phi).abs() <= self.radius
    }

    fn psi_value(&self, delta: f64) -> f64 {
        horner(&self.psi, delta)
    }

    /// Psi'(delta).
    fn psi_deriv(&self, delta: f64) -> f64 {
        let mut acc = 0.0;
        for (i, p) in self.psi.iter().enumerate().skip(1).rev() {
            acc = acc * delta + i as f64 * p;
        }
        acc
    }

    /// Tail sum (Psi(delta) - psi_0)/delta = psi_1 + psi_2 delta + ...
    fn psi_tail(&self, delta: f64) -> f64 {
        horner(&self.psi[1..], delta)
    }

    /// F(phi) for phi near b1, full relative accuracy in delta = b1 - phi.
    pub fn f_eval(&self, phi: f64) -> f64 {
        let delta = self.b1 - phi;
        delta * self.psi_value(delta)
    }

    /// F'(phi) near b1.
    pub fn f_deriv(&self, phi: f64) -> f64 {
        let delta = self.b1 - phi;
        -(self.psi_value(delta) + delta * self.psi_deriv(delta))
    }

    /// Regularized reciprocal: 1/F(phi) + 1/(phi - b1), finite at b1.
    pub fn rho_reg(&self, phi: f64) -> f64 {
        let delta = self.b1 - phi;
        -self.psi_tail(delta) / self.psi_value(delta)
    }

    /// Regularized moment: phi/F(phi) + b1/(phi - b1), finite at b1.
    pub fn p_reg(&self, phi: f64) -> f64 {
        let delta = self.b1 - phi;
        -(self.b1 * self.psi_tail(delta) + 1.0) / self.psi_value(delta)
    }
}

/// Which evaluation branch to force; for branch-agreement diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalBranch {
    Series,
    Direct,
}

/// A fully determined profile, ready for evaluation.
#[derive(Debug, Clone)]
pub struct SolitonProfile {
    pub geometry: Geometry,
    pub case: SolitonCase,
    pub h: HTable,
    pub mu: f64,
    pub nu: f64,
    pub b1: Option<f64>,
    pub closing: Option<ClosingSeries>,
    /// Below this the series branch evaluates F; above it the closed form.
    pub phi_switch: f64,
    pub warnings: Vec<String>,
    /// Coefficient of phi^m in the polynomial part of
    /// (1 + eps phi)^d F(phi); m = 0 ..= d+1, entry 0 is zero.
    series_poly: Vec<f64>,
    /// Its derivative coefficients.
    series_poly_d: Vec<f64>,
    /// Order d + n past which the series tail is the exponential remainder.
    tail_order: u32,
}

impl SolitonProfile {
    /// Shrinking profile on the noncompact total space; mu is solved for.
    pub fn shrinking_noncompact(geometry: Geometry) -> Result<Self> {
        let lambda = geometry.lambda();
        if !lambda.is_positive() {
            return Err(Error::InvalidParameter(format!(
                "shrinking regime requires lambda > 0, got lambda = {}",
                geometry.lambda_f64()
            )));
        }
        let h = HTable::new(geometry.clone());
        let mu = solve_mu_shrinking_with(&h)?;
        // nu vanishes identically at the solved mu; storing the exact zero
        // keeps the closed form free of 0 * inf at large phi.
        Ok(Self::assemble(
            geometry,
            SolitonCase::ShrinkingNoncompact,
            h,
            mu,
            0.0,
            None,
            Vec::new(),
        ))
    }

    /// Steady profile; lambda must vanish and mu < 0 is a free parameter.
    pub fn steady(geometry: Geometry, mu: f64) -> Result<Self> {
        if !geometry.lambda().is_zero() {
            return Err(Error::InvalidParameter(format!(
                "steady regime requires lambda = 0, got lambda = {}",
                geometry.lambda_f64()
            )));
        }
        Self::decaying(geometry, SolitonCase::Steady, mu)
    }

    /// Expanding profile; lambda must be negative and mu < 0 is a free
    /// parameter.
    pub fn expanding(geometry: Geometry, mu: f64) -> Result<Self> {
        if !geometry.lambda().is_negative() {
            return Err(Error::InvalidParameter(format!(
                "expanding regime requires lambda < 0, got lambda = {}",
                geometry.lambda_f64()
            )));
        }
        Self::decaying(geometry, SolitonCase::Expanding, mu)
    }

    fn decaying(geometry: Geometry, case: SolitonCase, mu: f64) -> Result<Self> {
        if !(mu < 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "{case} regime requires mu < 0, got {mu}"
            )));
        }
        let h = HTable::new(geometry.clone());
        let nu = nu_from_mu(&h, mu);
        Ok(Self::assemble(geometry, case, h, mu, nu, None, Vec::new()))
    }

    /// Compact shrinking profile on the projective compactification; mu is
    /// solved from the closing condition and the boundary values of F are
    /// verified before the profile is returned.
    pub fn compact_shrinking(geometry: Geometry) -> Result<Self> {
        let solve = solve_mu_compact(&geometry)?;
        let h = HTable::new(geometry.clone());
        let nu = nu_from_mu(&h, solve.mu);
        let closing = ClosingSeries::build(&geometry, solve.mu, solve.b1, 28);
        let profile = Self::assemble(
            geometry,
            SolitonCase::CompactShrinking,
            h,
            solve.mu,
            nu,
            Some((solve.b1, closing)),
            solve.warnings,
        );
        let (f_b1, df_b1) = profile.f_eval_branch(solve.b1, EvalBranch::Direct)?;
        if f_b1.abs() > tolerances::TOL_CLOSING_F {
            return Err(Error::Inconsistency(format!(
                "profile does not vanish at the boundary: F(b1) = {f_b1:e}"
            )));
        }
        if (df_b1 + 1.0).abs() > tolerances::TOL_CLOSING_DF {
            return Err(Error::Inconsistency(format!(
                "boundary slope off target: F'(b1) = {df_b1}, expected -1"
            )));
        }
        Ok(profile)
    }

    /// Dispatch on the regime; mu must be given exactly when the regime
    /// leaves it free (steady, expanding) and absent when it is solved for.
    pub fn build(geometry: Geometry, case: SolitonCase, mu: Option<f64>) -> Result<Self> {
        match (case, mu) {
            (SolitonCase::ShrinkingNoncompact, None) => Self::shrinking_noncompact(geometry),
            (SolitonCase::Steady, Some(mu)) => Self::steady(geometry, mu),
            (SolitonCase::Expanding, Some(mu)) => Self::expanding(geometry, mu),
            (SolitonCase::CompactShrinking, None) => Self::compact_shrinking(geometry),
            (SolitonCase::Steady | SolitonCase::Expanding, None) => {
                Err(Error::InvalidParameter(format!(
                    "{case} regime requires an explicit mu < 0"
                )))
            }
            (SolitonCase::ShrinkingNoncompact | SolitonCase::CompactShrinking, Some(_)) => {
                Err(Error::InvalidParameter(format!(
                    "{case} regime solves for mu; do not supply one"
                )))
            }
        }
    }

    fn assemble(
        geometry: Geometry,
        case: SolitonCase,
        h: HTable,
        mu: f64,
        nu: f64,
        boundary: Option<(f64, ClosingSeries)>,
        warnings: Vec<String>,
    ) -> Self {
        let d = geometry.d as usize;
        let n = geometry.n as usize;
        // Coefficients of the polynomial part of (1+eps phi)^d F: the
        // coefficient of phi^(l-n+1) is w_l / l! with
        // w_l = -sum_{k=n-1}^{l-1} h^(k)(0) mu^(l-1-k), n <= l <= d+n.
        // These carry no cancellation against the exponential tail.
        let mut series_poly = vec![0.0f64; d + 2];
        let mut l_fact = crate::exact::factorial(geometry.n - 1)
            .to_f64()
            .expect("factorial out of range");
        for l in n..=d + n {
            l_fact *= l as f64;
            let mut w = 0.0;
            for k in (n - 1)..l {
                w -= h.at_zero[k] * mu.powi((l - 1 - k) as i32);
            }
            series_poly[l - n + 1] = w / l_fact;
        }
        let series_poly_d: Vec<f64> = (0..series_poly.len() - 1)
            .map(|j| (j + 1) as f64 * series_poly[j + 1])
            .collect();
        let tail_order = geometry.d + geometry.n;
        let (b1, closing) = match boundary {
            Some((b1, closing)) => (Some(b1), Some(closing)),
            None => (None, None),
        };
        SolitonProfile {
            phi_switch: 0.5 / mu.abs().max(1.0),
            geometry,
            case,
            h,
            mu,
            nu,
            b1,
            closing,
            warnings,
            series_poly,
            series_poly_d,
            tail_order,
        }
    }

    fn check_domain(&self, phi: f64) -> Result<()> {
        if !phi.is_finite() || phi <= 0.0 {
            return Err(Error::Domain(format!(
                "profile evaluation requires finite phi > 0, got {phi}"
            )));
        }
        if let Some(b1) = self.b1 {
            if phi > b1 * (1.0 + 1e-12) {
                return Err(Error::Domain(format!(
                    "phi = {phi} lies beyond the closing boundary b1 = {b1}"
                )));
            }
        }
        Ok(())
    }

    /// F(phi).
    pub fn f_eval(&self, phi: f64) -> Result<f64> {
        self.f_and_deriv(phi).map(|(f, _)| f)
    }

    /// (F(phi), F'(phi)).
    pub fn f_and_deriv(&self, phi: f64) -> Result<(f64, f64)> {
        self.check_domain(phi)?;
        if phi <= self.phi_switch {
            Ok(self.eval_series(phi))
        } else {
            Ok(self.eval_direct(phi))
        }
    }

    /// Evaluate on a chosen branch regardless of the switch point.
    pub fn f_eval_branch(&self, phi: f64, branch: EvalBranch) -> Result<(f64, f64)> {
        self.check_domain(phi)?;
        match branch {
            EvalBranch::Series => Ok(self.eval_series(phi)),
            EvalBranch::Direct => Ok(self.eval_direct(phi)),
        }
    }

    fn eval_series(&self, phi: f64) -> (f64, f64) {
        let d = self.geometry.d as i32;
        let n = self.geometry.n as i32;
        let eps = self.geometry.eps_f64();
        let mut g = horner(&self.series_poly, phi);
        let mut dg = horner(&self.series_poly_d, phi);
        if self.nu != 0.0 {
            // Tail of the entire series beyond the polynomial part, with the
            // negative powers of phi cancelled analytically: the tail of
            // phi^(1-n) W is nu phi^(d+2) rho(phi) with
            // rho = sum_{l>m} mu^l phi^(l-m-1)/l!, m = d + n.
            let m = self.tail_order;
            let mut lead = 1.0f64;
            for l in 1..=m + 1 {
                lead *= self.mu / l as f64;
            }
            let x = self.mu * phi;
            let mut term = lead;
            let mut rho = term;
            for l in m + 2..m + 202 {
                term *= x / l as f64;
                rho += term;
                if term.abs() <= tolerances::TOL_SERIES * rho.abs().max(f64::MIN_POSITIVE) {
                    break;
                }
            }
            let p_d1 = phi.powi(d + 1);
            g += self.nu * p_d1 * phi * rho;
            dg += self.nu * p_d1 * (((1.0 - n as f64) + x) * rho + lead * (m + 1) as f64);
        }
        let base = 1.0 + eps * phi;
        let a = base.powi(-d);
        let f = a * g;
        let df = a * dg - d as f64 * eps * base.powi(-d - 1) * g;
        (f, df)
    }

    fn eval_direct(&self, phi: f64) -> (f64, f64) {
        let d = self.geometry.d as i32;
        let n = self.geometry.n as i32;
        let eps = self.geometry.eps_f64();
        let mu = self.mu;
        // S and S' from the derivative table, highest order first. S' is
        // evaluated independently rather than through S; downstream residual
        // checks rely on that independence.
        let mut s = 0.0;
        let mut ds = 0.0;
        let top = self.h.len() - 1;
        for k in (0..=top).rev() {
            let hk = self.h.eval(k, phi);
            s = s / mu + hk;
            if k >= 1 {
                ds = ds / mu + hk;
            }
        }
        let s = s / mu;
        let ds = ds / mu;
        let mut w = s;
        let mut dw = ds;
        if self.nu != 0.0 {
            let e = (mu * phi).exp();
            w += self.nu * e;
            dw += self.nu * mu * e;
        }
        let base = 1.0 + eps * phi;
        let a = base.powi(-d) * phi.powi(1 - n);
        let f = a * w;
        let df = a * (dw + w * (-(d as f64) * eps / base + (1.0 - n as f64) / phi));
        (f, df)
    }

    /// Scan [phi_lo, phi_hi] on a log grid for zeros of F; each sign change
    /// is refined by a bracketed solve. For the compact regime the scan is
    /// clipped below b1 and the boundary zero is reported separately.
    pub fn root_scan(&self, phi_lo: f64, phi_hi: f64, count: usize) -> Result<RootScan> {
        if !(phi_lo > 0.0 && phi_hi > phi_lo) || count < 8 {
            return Err(Error::InvalidParameter(format!(
                "root scan needs 0 < phi_lo < phi_hi and count >= 8, got [{phi_lo}, {phi_hi}] x {count}"
            )));
        }
        let mut hi = phi_hi;
        let mut boundary_root = None;
        if let Some(b1) = self.b1 {
            hi = hi.min(b1 * (1.0 - 1e-9));
            let f_b1 = self.f_eval_branch(b1, EvalBranch::Direct)?.0;
            if f_b1.abs() <= 1e-8 {
                boundary_root = Some(b1);
            }
        }
        let ratio = (hi / phi_lo).ln();
        let mut roots = Vec::new();
        let mut prev_phi = phi_lo;
        let mut prev_f = self.f_eval(prev_phi)?;
        for i in 1..=count {
            let phi = phi_lo * (ratio * i as f64 / count as f64).exp();
            let f = self.f_eval(phi)?;
            if prev_f == 0.0 {
                roots.push(prev_phi);
            } else if prev_f.signum() != f.signum() {
                let g = |x: f64| self.f_eval(x).unwrap_or(f64::NAN);
                let root = rootfind::solve_bracketed(g, prev_phi, phi, 1e-12, 200)?;
                roots.push(root);
            }
            prev_phi = phi;
            prev_f = f;
        }
        Ok(RootScan {
            phi_lo,
            phi_hi: hi,
            grid_size: count,
            roots,
            boundary_root,
        })
    }
}

/// Result of a profile zero scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RootScan {
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub grid_size: usize,
    pub roots: Vec<f64>,
    pub boundary_root: Option<f64>,
}
