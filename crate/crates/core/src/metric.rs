//! Metric reconstruction on top of a profile.
//!
//! The radial coordinate r(phi) is the integral of 1/F and the momentum
//! P(phi) the integral of phi/F, both anchored so r = P = 0 at a chosen
//! anchor point. The integrable endpoint behaviour is always subtracted
//! analytically: 1/F ~ 1/phi at the zero section, and 1/F ~ -1/(phi - b1)
//! at the closing boundary of the compact regime, where the closing series
//! supplies the regularized integrands with full relative accuracy.
//!
//! On top of the grid sit the monotone inverse phi(r), metric eigenvalues,
//! tail asymptotics (power law or inverted linear-log law), closing data for
//! the compact boundary, flow pullback samples, and completeness
//! diagnostics.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Geometry;
use crate::profile::{SolitonCase, SolitonProfile};
use crate::quad;
use crate::rootfind;
use crate::tolerances;

/// One grid node: fiber potential phi, profile value F, radial coordinate r,
/// scale s = e^r, momentum P.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridRow {
    pub phi: f64,
    pub f: f64,
    pub r: f64,
    pub s: f64,
    pub p: f64,
}

/// Grid construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridConfig {
    pub phi_min: f64,
    pub phi_max: f64,
    pub count: usize,
    /// Where r and P vanish.
    pub anchor: f64,
}

impl GridConfig {
    /// Defaults: log range [1e-6, 1e3] anchored at 1 for noncompact
    /// profiles; up to just below the boundary, anchored at b1/2, for
    /// compact ones.
    pub fn default_for(profile: &SolitonProfile) -> GridConfig {
        match profile.b1 {
            Some(b1) => GridConfig {
                phi_min: 1e-6,
                phi_max: b1 * (1.0 - 1e-9),
                count: 2048,
                anchor: 0.5 * b1,
            },
            None => GridConfig {
                phi_min: 1e-6,
                phi_max: 1e3,
                count: 2048,
                anchor: 1.0,
            },
        }
    }
}

/// Eigenvalues of the metric relative to the reference coframe at one phi:
/// the horizontal family 1 + eps phi (multiplicity d), the tangential fiber
/// family phi/s (multiplicity n - 1), and the radial fiber direction F/s
/// (multiplicity 1).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricEigenvalues {
    pub horizontal: f64,
    pub fiber_tangential: f64,
    pub fiber_radial: f64,
}

impl MetricEigenvalues {
    /// (d, n - 1, 1).
    pub fn multiplicities(g: &Geometry) -> (u32, u32, u32) {
        (g.d, g.n - 1, 1)
    }

    /// Strict positivity over the families with nonzero multiplicity.
    pub fn all_positive(&self, g: &Geometry) -> bool {
        (g.d == 0 || self.horizontal > 0.0)
            && (g.n == 1 || self.fiber_tangential > 0.0)
            && self.fiber_radial > 0.0
    }
}

/// Tail behaviour of the radial coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AsymptoticData {
    /// phi(r) ~ d0 e^(p r): shrinking and expanding regimes.
    PowerLaw {
        p: f64,
        d0: f64,
        tail_integral: f64,
    },
    /// r(phi) ~ phi/c1 + (c2/c1^2) log(c1 phi - c2) - r_shift: steady
    /// regime. tail_fit_residual is the worst relative misfit of that law
    /// over the outer decade of the grid.
    Steady {
        c1: f64,
        c2: f64,
        r_shift: f64,
        tail_fit_residual: f64,
    },
}

/// Boundary data of the compact regime: phi -> b1 with
/// b1 - phi ~ c0 e^(-r).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosingData {
    pub c0: f64,
    /// Limit of the horizontal eigenvalue, 1 + eps b1.
    pub horizontal: f64,
    /// Limit of phi, scale of the tangential family.
    pub tangential_scale: f64,
    /// Scale of e^r (b1 - phi), the radial closing rate.
    pub radial_scale: f64,
    /// Worst relative deviation of (b1 - phi) e^r / c0 from 1 over the
    /// outer tail of the grid.
    pub tail_deviation: f64,
}

/// One sample of the flow pulled back to the fixed coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PullbackSample {
    pub t: f64,
    pub t_effective: f64,
    pub r_mapped: f64,
    pub scale: f64,
    pub scaled_phi: f64,
    pub scaled_f: f64,
    pub extrapolated: bool,
}

/// Raw numbers behind the completeness reading of the ends.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompletenessDiagnostics {
    /// r(2 phi_min) - r(phi_min); ln 2 when the zero-section end behaves
    /// like the smooth centre r ~ log phi.
    pub lower_log_increment: f64,
    /// r(phi_max) - r(phi_max/2): growth of the radial coordinate across
    /// the outermost octave.
    pub upper_arc_increment: f64,
    /// d log phi / d r between the last two rows.
    pub upper_slope: f64,
}

/// The assembled grid.
#[derive(Debug, Clone)]
pub struct ProfileGrid {
    profile: SolitonProfile,
    pub config: GridConfig,
    pub rows: Vec<GridRow>,
    /// For the compact regime, the exact node separating the zero-section
    /// integrand region from the boundary region.
    split: Option<f64>,
}

impl ProfileGrid {
    /// Build with defaults for the profile's regime.
    pub fn build_default(profile: &SolitonProfile) -> Result<ProfileGrid> {
        Self::build(profile, &GridConfig::default_for(profile))
    }

    pub fn build(profile: &SolitonProfile, config: &GridConfig) -> Result<ProfileGrid> {
        let cfg = config.clone();
        if !(cfg.phi_min > 0.0 && cfg.phi_max > cfg.phi_min) {
            return Err(Error::InvalidParameter(format!(
                "grid needs 0 < phi_min < phi_max, got [{}, {}]",
                cfg.phi_min, cfg.phi_max
            )));
        }
        if !(16..=10_000_000).contains(&cfg.count) {
            return Err(Error::InvalidParameter(format!(
                "grid count {} outside supported range [16, 1e7]",
                cfg.count
            )));
        }
        if !(cfg.anchor >= cfg.phi_min && cfg.anchor <= cfg.phi_max) {
            return Err(Error::InvalidParameter(format!(
                "anchor {} outside grid range [{}, {}]",
                cfg.anchor, cfg.phi_min, cfg.phi_max
            )));
        }
        if let Some(b1) = profile.b1 {
            if cfg.phi_max >= b1 {
                return Err(Error::InvalidParameter(format!(
                    "phi_max = {} must stay below the closing boundary b1 = {b1}",
                    cfg.phi_max
                )));
            }
        }

        // Positivity sweep at 4x resolution: the 1/F integrands require a
        // strictly positive profile over the whole range.
        let sweep = 4 * cfg.count;
        let log_span = (cfg.phi_max / cfg.phi_min).ln();
        for i in 0..=sweep {
            let phi = cfg.phi_min * (log_span * i as f64 / sweep as f64).exp();
            let f = profile.f_eval(phi)?;
            if !(f > 0.0) {
                return Err(Error::Positivity(format!(
                    "profile is not positive at phi = {phi}: F = {f}"
                )));
            }
        }

        let mut grid = ProfileGrid {
            profile: profile.clone(),
            split: profile.b1.map(|b1| 0.5 * b1),
            config: cfg.clone(),
            rows: Vec::new(),
        };
        let nodes = grid.place_nodes()?;

        // Cumulative anchored integrals.
        let mut r_raw = Vec::with_capacity(nodes.len());
        let mut p_raw = Vec::with_capacity(nodes.len());
        r_raw.push(0.0);
        p_raw.push(0.0);
        for w in nodes.windows(2) {
            let dr = grid.r_increment(w[0], w[1])?;
            let dp = grid.p_increment(w[0], w[1])?;
            r_raw.push(r_raw.last().unwrap() + dr);
            p_raw.push(p_raw.last().unwrap() + dp);
        }
        // Shift so r = P = 0 at the anchor.
        let j = nodes.partition_point(|&x| x <= cfg.anchor) - 1;
        let r_anchor = r_raw[j] + grid.r_increment(nodes[j], cfg.anchor)?;
        let p_anchor = p_raw[j] + grid.p_increment(nodes[j], cfg.anchor)?;

        let mut rows = Vec::with_capacity(nodes.len());
        for (i, &phi) in nodes.iter().enumerate() {
            let r = r_raw[i] - r_anchor;
            rows.push(GridRow {
                phi,
                f: grid.profile.f_eval(phi)?,
                r,
                s: r.exp(),
                p: p_raw[i] - p_anchor,
            });
        }
        for w in rows.windows(2) {
            if !(w[1].r > w[0].r) {
                return Err(Error::Inconsistency(format!(
                    "radial coordinate not increasing between phi = {} and {}",
                    w[0].phi, w[1].phi
                )));
            }
        }
        grid.rows = rows;
        Ok(grid)
    }

    pub fn profile(&self) -> &SolitonProfile {
        &self.profile
    }

    fn place_nodes(&self) -> Result<Vec<f64>> {
        let cfg = &self.config;
        let mut nodes = Vec::with_capacity(cfg.count);
        match self.split {
            None => {
                let span = (cfg.phi_max / cfg.phi_min).ln();
                let m = cfg.count - 1;
                for i in 0..=m {
                    nodes.push(cfg.phi_min * (span * i as f64 / m as f64).exp());
                }
                // Endpoints exact.
                nodes[0] = cfg.phi_min;
                nodes[m] = cfg.phi_max;
            }
            Some(split) => {
                let b1 = self.profile.b1.unwrap();
                if cfg.phi_min >= split || cfg.phi_max <= split {
                    return Err(Error::InvalidParameter(format!(
                        "compact grid range [{}, {}] must straddle the region split {split}",
                        cfg.phi_min, cfg.phi_max
                    )));
                }
                // Zero-section half: log spaced in phi up to the split
                // node; boundary half: log spaced in delta = b1 - phi down
                // to the outer edge.
                let k1 = cfg.count / 2;
                let k2 = cfg.count - k1 - 1;
                let span1 = (split / cfg.phi_min).ln();
                for i in 0..=k1 {
                    nodes.push(cfg.phi_min * (span1 * i as f64 / k1 as f64).exp());
                }
                nodes[0] = cfg.phi_min;
                nodes[k1] = split;
                let delta_hi = b1 - split;
                let delta_lo = b1 - cfg.phi_max;
                let span2 = (delta_lo / delta_hi).ln();
                for j in 1..=k2 {
                    let delta = delta_hi * (span2 * j as f64 / k2 as f64).exp();
                    nodes.push(b1 - delta);
                }
                let last = nodes.len() - 1;
                nodes[last] = cfg.phi_max;
            }
        }
        Ok(nodes)
    }

    /// True when [a, b] lies in the boundary integrand region.
    fn boundary_region(&self, a: f64) -> bool {
        matches!(self.split, Some(split) if a >= split)
    }

    /// Integral of 1/F over [a, b] (a <= b, both inside one region), with
    /// the endpoint singularity handled analytically.
    fn r_increment(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let profile = &self.profile;
        if self.boundary_region(a) {
            let b1 = profile.b1.unwrap();
            let closing = profile.closing.as_ref();
            let reg = quad::integrate(
                |u| {
                    if let Some(cs) = closing {
                        if cs.in_range(u) {
                            return cs.rho_reg(u);
                        }
                    }
                    match profile.f_eval(u) {
                        Ok(f) => 1.0 / f + 1.0 / (u - b1),
                        Err(_) => f64::NAN,
                    }
                },
                a,
                b,
                tolerances::TOL_QUAD,
            )?;
            Ok(reg + ((b1 - a) / (b1 - b)).ln())
        } else {
            let reg = quad::integrate(
                |u| match profile.f_eval(u) {
                    Ok(f) => (u - f) / (u * f),
                    Err(_) => f64::NAN,
                },
                a,
                b,
                tolerances::TOL_QUAD,
            )?;
            Ok(reg + (b / a).ln())
        }
    }

    /// Integral of phi/F over [a, b] under the same region rules.
    fn p_increment(&self, a: f64, b: f64) -> Result<f64> {
        if a == b {
            return Ok(0.0);
        }
        let profile = &self.profile;
        if self.boundary_region(a) {
            let b1 = profile.b1.unwrap();
            let closing = profile.closing.as_ref();
            let reg = quad::integrate(
                |u| {
                    if let Some(cs) = closing {
                        if cs.in_range(u) {
                            return cs.p_reg(u);
                        }
                    }
                    match profile.f_eval(u) {
                        Ok(f) => u / f + b1 / (u - b1),
                        Err(_) => f64::NAN,
                    }
                },
                a,
                b,
                tolerances::TOL_QUAD,
            )?;
            Ok(reg + b1 * ((b1 - a) / (b1 - b)).ln())
        } else {
            quad::integrate(
                |u| match profile.f_eval(u) {
                    Ok(f) => u / f,
                    Err(_) => f64::NAN,
                },
                a,
                b,
                tolerances::TOL_QUAD,
            )
        }
    }

    /// r(phi) for phi inside the grid range.
    pub fn r_of_phi(&self, phi: f64) -> Result<f64> {
        let row = self.locate_phi(phi)?;
        Ok(row.r + self.r_increment(row.phi, phi)?)
    }

    /// P(phi) for phi inside the grid range.
    pub fn p_of_phi(&self, phi: f64) -> Result<f64> {
        let row = self.locate_phi(phi)?;
        Ok(row.p + self.p_increment(row.phi, phi)?)
    }

    /// Largest row at or below phi.
    fn locate_phi(&self, phi: f64) -> Result<&GridRow> {
        let rows = &self.rows;
        let first = rows.first().unwrap();
        let last = rows.last().unwrap();
        if !(phi >= first.phi && phi <= last.phi) {
            return Err(Error::Domain(format!(
                "phi = {phi} outside grid range [{}, {}]",
                first.phi, last.phi
            )));
        }
        let idx = rows.partition_point(|row| row.phi <= phi);
        Ok(&rows[idx - 1])
    }

    /// Monotone inverse phi(r), valid for r within the grid range.
    pub fn phi_of_r(&self, r: f64) -> Result<f64> {
        let rows = &self.rows;
        let first = rows.first().unwrap();
        let last = rows.last().unwrap();
        if !(r >= first.r && r <= last.r) {
            return Err(Error::Domain(format!(
                "r = {r} outside grid range [{}, {}]",
                first.r, last.r
            )));
        }
        let idx = rows.partition_point(|row| row.r <= r);
        if idx == rows.len() {
            return Ok(last.phi);
        }
        let lo = &rows[idx - 1];
        let hi = &rows[idx];
        if r == lo.r {
            return Ok(lo.phi);
        }
        // Newton iteration phi <- phi - (r(phi) - r) F(phi), safeguarded by
        // the shrinking bracket [lo, hi]; the local r is refined by
        // quadrature from the bracketing row.
        let mut blo = lo.phi;
        let mut bhi = hi.phi;
        let frac = (r - lo.r) / (hi.r - lo.r);
        let mut phi = blo * (bhi / blo).powf(frac);
        for _ in 0..80 {
            let r_local = lo.r + self.r_increment(lo.phi, phi)?;
            let err = r_local - r;
            if err.abs() <= tolerances::TOL_INV {
                return Ok(phi);
            }
            if err > 0.0 {
                bhi = phi;
            } else {
                blo = phi;
            }
            let f = self.profile.f_eval(phi)?;
            let next = phi - err * f;
            phi = if next.is_finite() && next > blo && next < bhi {
                next
            } else {
                0.5 * (blo + bhi)
            };
        }
        Err(Error::SolverFailure(format!(
            "inverse of the radial coordinate did not converge at r = {r}"
        )))
    }

    /// phi(r) extended beyond the grid by the regime's asymptotic law; the
    /// flag reports when extrapolation was used.
    pub fn phi_of_r_extended(&self, r: f64) -> Result<(f64, bool)> {
        let first = self.rows.first().unwrap();
        let last = self.rows.last().unwrap();
        if r >= first.r && r <= last.r {
            return Ok((self.phi_of_r(r)?, false));
        }
        if r < first.r {
            // Near the zero section r ~ log phi + const.
            return Ok((first.phi * (r - first.r).exp(), true));
        }
        let phi = match self.profile.case {
            SolitonCase::ShrinkingNoncompact | SolitonCase::Expanding => {
                match self.asymptotic_data()? {
                    AsymptoticData::PowerLaw { p, d0, .. } => d0 * (p * r).exp(),
                    AsymptoticData::Steady { .. } => unreachable!(),
                }
            }
            SolitonCase::Steady => match self.asymptotic_data()? {
                AsymptoticData::Steady { c1, c2, r_shift, .. } => {
                    let target = r + r_shift;
                    let law = |u: f64| u / c1 + (c2 / (c1 * c1)) * (c1 * u - c2).ln() - target;
                    let mut hi = last.phi * 2.0;
                    let mut guard = 0;
                    while law(hi) < 0.0 && guard < 200 {
                        hi *= 2.0;
                        guard += 1;
                    }
                    rootfind::solve_bracketed(law, last.phi * 0.5, hi, 1e-13, 200)?
                }
                AsymptoticData::PowerLaw { .. } => unreachable!(),
            },
            SolitonCase::CompactShrinking => {
                let closing = self.closing_data()?;
                self.profile.b1.unwrap() - closing.c0 * (-r).exp()
            }
        };
        Ok((phi, true))
    }

    /// Metric eigenvalues at phi (phi inside the grid range).
    pub fn metric_eigenvalues(&self, phi: f64) -> Result<MetricEigenvalues> {
        let r = self.r_of_phi(phi)?;
        let s = r.exp();
        let f = self.profile.f_eval(phi)?;
        let g = &self.profile.geometry;
        Ok(MetricEigenvalues {
            horizontal: 1.0 + g.eps_f64() * phi,
            fiber_tangential: phi / s,
            fiber_radial: f / s,
        })
    }

    /// Tail asymptotics; defined for the noncompact regimes.
    pub fn asymptotic_data(&self) -> Result<AsymptoticData> {
        match self.profile.case {
            SolitonCase::ShrinkingNoncompact | SolitonCase::Expanding => self.power_law_data(),
            SolitonCase::Steady => self.steady_data(),
            SolitonCase::CompactShrinking => Err(Error::InvalidParameter(
                "compact regime has closing data instead of tail asymptotics".into(),
            )),
        }
    }

    fn power_law_data(&self) -> Result<AsymptoticData> {
        let profile = &self.profile;
        let p = profile.geometry.lambda_f64() / profile.mu;
        let anchor = self.config.anchor;
        let integrand = |u: f64| match profile.f_eval(u) {
            Ok(f) => (p * u - f) / (u * f),
            Err(_) => f64::NAN,
        };
        let tail_integral = integrate_to_far(integrand, anchor, 0.0)?;
        let d0 = anchor * (-tail_integral).exp();
        Ok(AsymptoticData::PowerLaw {
            p,
            d0,
            tail_integral,
        })
    }

    fn steady_data(&self) -> Result<AsymptoticData> {
        let profile = &self.profile;
        let g = &profile.geometry;
        let n = g.n as f64;
        let mu = profile.mu;
        let c1 = -n / mu;
        let d_eff = if g.eps.is_zero() { 0.0 } else { g.d as f64 };
        let c2 = n * (d_eff + n - 1.0) / (mu * mu);
        // The law R(u) = u/c1 + (c2/c1^2) log(c1 u - c2) needs c1 u > c2;
        // anchor the matching point safely past that.
        let phi0 = self.config.anchor.max(2.0 * c2 / c1 + 1.0);
        let last = self.rows.last().unwrap();
        if phi0 > last.phi {
            return Err(Error::SolverFailure(format!(
                "grid top {} does not reach the asymptotic matching point {phi0}",
                last.phi
            )));
        }
        let law = |u: f64| u / c1 + (c2 / (c1 * c1)) * (c1 * u - c2).ln();
        let integrand = |u: f64| match profile.f_eval(u) {
            Ok(f) => {
                let law_slope = 1.0 / c1 + (c2 / c1) / (c1 * u - c2);
                1.0 / f - law_slope
            }
            Err(_) => f64::NAN,
        };
        let r_phi0 = self.r_of_phi(phi0)?;
        let correction = integrate_to_far(integrand, phi0, 1.0 / c1.abs())?;
        let r_shift = law(phi0) - r_phi0 - correction;

        // Worst misfit of the law over the outer decade.
        let cut = last.phi / 10.0;
        let mut worst = 0.0f64;
        for row in self.rows.iter().filter(|row| row.phi >= cut) {
            let predicted = law(row.phi) - r_shift;
            let misfit = (predicted - row.r).abs() / row.r.abs().max(1.0);
            worst = worst.max(misfit);
        }
        Ok(AsymptoticData::Steady {
            c1,
            c2,
            r_shift,
            tail_fit_residual: worst,
        })
    }

    /// Boundary data; defined for the compact regime.
    pub fn closing_data(&self) -> Result<ClosingData> {
        let profile = &self.profile;
        let (b1, closing) = match (profile.b1, profile.closing.as_ref()) {
            (Some(b1), Some(closing)) => (b1, closing),
            _ => {
                return Err(Error::InvalidParameter(
                    "closing data is defined for the compact regime only".into(),
                ))
            }
        };
        let anchor = self.config.anchor;
        let series_edge = b1 - closing.radius;
        let rho_direct = |u: f64| match profile.f_eval(u) {
            Ok(f) => 1.0 / f + 1.0 / (u - b1),
            Err(_) => f64::NAN,
        };
        let mut total = 0.0;
        if anchor < series_edge {
            total += quad::integrate(rho_direct, anchor, series_edge, tolerances::TOL_QUAD)?;
            total += quad::integrate(|u| closing.rho_reg(u), series_edge, b1, tolerances::TOL_QUAD)?;
        } else {
            total += quad::integrate(|u| closing.rho_reg(u), anchor, b1, tolerances::TOL_QUAD)?;
        }
        let c0 = (b1 - anchor) * total.exp();

        let g = &profile.geometry;
        // The product (b1 - phi) e^r approaches c0 at rate O(b1 - phi), so
        // constancy is measured over the outermost rows only.
        let cut = b1 * (1.0 - 1e-5);
        let mut worst = 0.0f64;
        for row in self.rows.iter().filter(|row| row.phi >= cut) {
            let dev = ((b1 - row.phi) * row.s / c0 - 1.0).abs();
            worst = worst.max(dev);
        }
        Ok(ClosingData {
            c0,
            horizontal: 1.0 + g.eps_f64() * b1,
            tangential_scale: b1,
            radial_scale: c0,
            tail_deviation: worst,
        })
    }

    /// Least-squares slope of log phi against r over the outer decade of
    /// the grid; approximates the power-law rate for the noncompact
    /// regimes.
    pub fn tail_slope_fit(&self) -> Result<f64> {
        if self.profile.case == SolitonCase::CompactShrinking {
            return Err(Error::InvalidParameter(
                "tail slope fit applies to noncompact regimes".into(),
            ));
        }
        let last = self.rows.last().unwrap();
        let cut = last.phi / 10.0;
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|row| row.phi >= cut)
            .map(|row| (row.r, row.phi.ln()))
            .collect();
        if pts.len() < 8 {
            return Err(Error::SolverFailure(
                "too few rows in the outer decade for a slope fit".into(),
            ));
        }
        let m = pts.len() as f64;
        let mean_r: f64 = pts.iter().map(|(r, _)| r).sum::<f64>() / m;
        let mean_l: f64 = pts.iter().map(|(_, l)| l).sum::<f64>() / m;
        let mut num = 0.0;
        let mut den = 0.0;
        for (r, l) in &pts {
            num += (r - mean_r) * (l - mean_l);
            den += (r - mean_r) * (r - mean_r);
        }
        Ok(num / den)
    }

    /// Pull the flow back to the fixed frame at parameter time t, sampling
    /// the point that sits at radial coordinate r at time zero. Requires
    /// 1 - lambda t > 0.
    pub fn flow_pullback_sample(&self, r: f64, t: f64) -> Result<PullbackSample> {
        let lambda = self.profile.geometry.lambda_f64();
        let scale = 1.0 - lambda * t;
        if !(scale > 0.0) {
            return Err(Error::Domain(format!(
                "flow time t = {t} is at or beyond the singular time of the regime"
            )));
        }
        let t_effective = if lambda == 0.0 {
            t
        } else {
            -(-lambda * t).ln_1p() / lambda
        };
        let r_mapped = r + self.profile.mu * t_effective;
        let (phi, extrapolated) = self.phi_of_r_extended(r_mapped)?;
        let f = self.profile.f_eval(phi)?;
        Ok(PullbackSample {
            t,
            t_effective,
            r_mapped,
            scale,
            scaled_phi: scale * phi,
            scaled_f: scale * f,
            extrapolated,
        })
    }

    /// End-behaviour numbers for the completeness reading.
    pub fn completeness_diagnostics(&self) -> Result<CompletenessDiagnostics> {
        let rows = &self.rows;
        let first = rows.first().unwrap();
        let last = rows.last().unwrap();
        let lower = self.r_of_phi(2.0 * first.phi)? - first.r;
        let upper = last.r - self.r_of_phi(0.5 * last.phi)?;
        let prev = &rows[rows.len() - 2];
        let upper_slope = (last.phi.ln() - prev.phi.ln()) / (last.r - prev.r);
        Ok(CompletenessDiagnostics {
            lower_log_increment: lower,
            upper_arc_increment: upper,
            upper_slope,
        })
    }
}

/// Integrate a decaying tail integrand from `from` out to effectively
/// infinity: per-decade panels up to 1e10, then a 1/u^2 extrapolation of the
/// remainder from the last evaluated point.
fn integrate_to_far<F>(mut f: F, from: f64, eval_noise: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    const FAR: f64 = 1e10;
    let mut total = 0.0;
    let mut a = from;
    while a < FAR {
        let b = (a * 10.0).min(FAR);
        // An integrand assembled as a small difference of terms of size
        // eval_noise carries that much rounding noise per evaluation, and no
        // subdivision gets below noise times width on the stretch.
        let tol = tolerances::TOL_QUAD.max(100.0 * f64::EPSILON * eval_noise * (b - a));
        total += quad::integrate(&mut f, a, b, tol)?;
        a = b;
    }
    // Remainder: integrand ~ kappa/u^2 gives kappa/U = U * f(U).
    let tail = FAR * f(FAR);
    if tail.is_finite() {
        total += tail;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rational;

    fn f1_profile() -> SolitonProfile {
        let g = Geometry::new(1, 1, rational(2, 1), rational(1, 1)).unwrap();
        SolitonProfile::shrinking_noncompact(g).unwrap()
    }

    fn cigar_profile() -> SolitonProfile {
        let g = Geometry::new(0, 1, rational(0, 1), rational(0, 1)).unwrap();
        SolitonProfile::steady(g, -1.0).unwrap()
    }

    #[test]
    fn cigar_grid_matches_closed_form() {
        let p = cigar_profile();
        let cfg = GridConfig {
            phi_min: 1e-4,
            phi_max: 10.0,
            count: 512,
            anchor: 1.0,
        };
        let grid = ProfileGrid::build(&p, &cfg).unwrap();
        // r(phi) = log(e^phi - 1) - log(e - 1), so phi = log(1 + C e^r).
        let c = 1f64.exp() - 1.0;
        for row in &grid.rows {
            let predicted = (c * row.r.exp()).ln_1p();
            assert!(
                (row.phi - predicted).abs() < 1e-10,
                "phi = {}: {} vs {predicted}",
                row.phi,
                row.phi
            );
        }
    }

    #[test]
    fn anchor_normalization() {
        let grid = ProfileGrid::build_default(&f1_profile()).unwrap();
        let r1 = grid.r_of_phi(1.0).unwrap();
        let p1 = grid.p_of_phi(1.0).unwrap();
        assert!(r1.abs() < 1e-12);
        assert!(p1.abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        let grid = ProfileGrid::build_default(&f1_profile()).unwrap();
        for phi in [1e-5, 1e-2, 0.5, 1.0, 7.3, 151.0, 900.0] {
            let r = grid.r_of_phi(phi).unwrap();
            let back = grid.phi_of_r(r).unwrap();
            assert!(
                ((back - phi) / phi).abs() < 1e-9,
                "phi = {phi}, back = {back}"
            );
        }
    }

    #[test]
    fn eigenvalues_at_anchor() {
        let p = f1_profile();
        let grid = ProfileGrid::build_default(&p).unwrap();
        let eig = grid.metric_eigenvalues(1.0).unwrap();
        // r(1) = 0 so s = 1 there.
        assert!((eig.horizontal - 2.0).abs() < 1e-12);
        assert!((eig.fiber_tangential - 1.0).abs() < 1e-10);
        let f1 = p.f_eval(1.0).unwrap();
        assert!((eig.fiber_radial - f1).abs() < 1e-10);
        assert!(eig.all_positive(&p.geometry));
        assert_eq!(
            MetricEigenvalues::multiplicities(&p.geometry),
            (1, 0, 1)
        );
    }

    #[test]
    fn power_law_tail() {
        let p = f1_profile();
        let cfg = GridConfig {
            phi_min: 1e-6,
            phi_max: 1e5,
            count: 1024,
            anchor: 1.0,
        };
        let grid = ProfileGrid::build(&p, &cfg).unwrap();
        let expect_p = 1.0 / std::f64::consts::SQRT_2;
        match grid.asymptotic_data().unwrap() {
            AsymptoticData::PowerLaw { p: rate, d0, .. } => {
                assert!((rate - expect_p).abs() < 1e-14);
                assert!(d0 > 0.0);
                // The top rows should follow phi ~ d0 e^(p r).
                let last = grid.rows.last().unwrap();
                let predicted = d0 * (expect_p * last.r).exp();
                assert!(
                    ((predicted - last.phi) / last.phi).abs() < 1e-3,
                    "{predicted} vs {}",
                    last.phi
                );
            }
            other => panic!("unexpected asymptotics {other:?}"),
        }
        let slope = grid.tail_slope_fit().unwrap();
        assert!(((slope - expect_p) / expect_p).abs() < 1e-2);
    }

    #[test]
    fn steady_tail_inversion() {
        let p = cigar_profile();
        let cfg = GridConfig {
            phi_min: 1e-6,
            phi_max: 50.0,
            count: 1024,
            anchor: 1.0,
        };
        let grid = ProfileGrid::build(&p, &cfg).unwrap();
        match grid.asymptotic_data().unwrap() {
            AsymptoticData::Steady {
                c1,
                c2,
                r_shift,
                tail_fit_residual,
            } => {
                assert!((c1 - 1.0).abs() < 1e-14);
                assert_eq!(c2, 0.0);
                // Closed form: R(u) - r(u) = u - log(e^u - 1) + log(e - 1)
                // tends to log(e - 1).
                let expect = (1f64.exp() - 1.0).ln();
                assert!((r_shift - expect).abs() < 1e-9, "shift = {r_shift}");
                // The fiberless law carries an e^(-phi) remainder, so the
                // misfit at the decade cut phi = 5 sits near 1e-3.
                assert!(tail_fit_residual < 1e-2, "misfit = {tail_fit_residual}");
            }
            other => panic!("unexpected asymptotics {other:?}"),
        }
    }

    #[test]
    fn compact_closing_tail() {
        let g = Geometry::new(1, 1, rational(2, 1), rational(1, 1)).unwrap();
        let p = SolitonProfile::compact_shrinking(g).unwrap();
        let grid = ProfileGrid::build_default(&p).unwrap();
        let closing = grid.closing_data().unwrap();
        assert!(closing.c0 > 0.0);
        assert!((closing.horizontal - 3.0).abs() < 1e-12);
        assert_eq!(closing.tangential_scale, 2.0);
        assert!(closing.tail_deviation < 1e-4, "{}", closing.tail_deviation);
        let last = grid.rows.last().unwrap();
        let ratio = (2.0 - last.phi) * last.s / closing.c0;
        assert!((ratio - 1.0).abs() < 1e-6, "ratio = {ratio}");
    }

    #[test]
    fn pullback_identity_at_time_zero() {
        let grid = ProfileGrid::build_default(&f1_profile()).unwrap();
        let sample = grid.flow_pullback_sample(0.7, 0.0).unwrap();
        assert_eq!(sample.scale, 1.0);
        assert_eq!(sample.r_mapped, 0.7);
        assert!(!sample.extrapolated);
        let phi = grid.phi_of_r(0.7).unwrap();
        assert_eq!(sample.scaled_phi, phi);
    }

    #[test]
    fn pullback_approaches_power_law_at_singular_time() {
        let grid = ProfileGrid::build_default(&f1_profile()).unwrap();
        let (p, d0) = match grid.asymptotic_data().unwrap() {
            AsymptoticData::PowerLaw { p, d0, .. } => (p, d0),
            other => panic!("unexpected asymptotics {other:?}"),
        };
        // lambda = 1: as t -> 1 the pulled-back potential tends to d0 e^(p r).
        let r = 1.0;
        let sample = grid.flow_pullback_sample(r, 1.0 - 1e-7).unwrap();
        let limit = d0 * (p * r).exp();
        assert!(
            ((sample.scaled_phi - limit) / limit).abs() < 1e-3,
            "{} vs {limit}",
            sample.scaled_phi
        );
    }

    #[test]
    fn pullback_rejects_singular_time() {
        let grid = ProfileGrid::build_default(&f1_profile()).unwrap();
        assert!(matches!(
            grid.flow_pullback_sample(0.0, 1.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn completeness_numbers() {
        let grid = ProfileGrid::build_default(&f1_profile()).unwrap();
        let diag = grid.completeness_diagnostics().unwrap();
        assert!((diag.lower_log_increment - 2f64.ln()).abs() < 1e-5);
        assert!(diag.upper_arc_increment > 0.0);
        // Power-law end: d log phi / dr tends to p = 1/sqrt(2).
        assert!((diag.upper_slope - 1.0 / std::f64::consts::SQRT_2).abs() < 1e-2);
    }

    #[test]
    fn extended_inverse_flags_extrapolation() {
        let grid = ProfileGrid::build_default(&f1_profile()).unwrap();
        let last = grid.rows.last().unwrap();
        let (phi, flagged) = grid.phi_of_r_extended(last.r + 0.5).unwrap();
        assert!(flagged);
        assert!(phi > last.phi);
        let first = grid.rows.first().unwrap();
        let (phi, flagged) = grid.phi_of_r_extended(first.r - 1.0).unwrap();
        assert!(flagged);
        assert!(phi < first.phi);
        let (_, flagged) = grid.phi_of_r_extended(0.0).unwrap();
        assert!(!flagged);
    }

    #[test]
    fn grid_validation() {
        let p = f1_profile();
        let bad = GridConfig {
            phi_min: 1.0,
            phi_max: 0.5,
            count: 128,
            anchor: 0.7,
        };
        assert!(matches!(
            ProfileGrid::build(&p, &bad),
            Err(Error::InvalidParameter(_))
        ));
        let g = Geometry::new(1, 1, rational(2, 1), rational(1, 1)).unwrap();
        let c = SolitonProfile::compact_shrinking(g).unwrap();
        let beyond = GridConfig {
            phi_min: 1e-6,
            phi_max: 2.5,
            count: 128,
            anchor: 1.0,
        };
        assert!(matches!(
            ProfileGrid::build(&c, &beyond),
            Err(Error::InvalidParameter(_))
        ));
    }
}
