//! Mode drivers: solve, verify, sweep, quotient.
//!
//! Every driver is a pure function from a merged configuration to a report
//! document; the binary only handles argument parsing and I/O around these.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use krsol::exact::{rational, Geometry};
use krsol::metric::{GridConfig, ProfileGrid};
use krsol::profile::{classify_noncompact, EvalBranch, SolitonCase, SolitonProfile};
use krsol::quotient::{legendre_numeric, phi_a_closed, upstairs_potential};
use krsol::verify::{
    default_residual_phis, finite_sum_identity_exact, finite_sum_identity_residual,
    finite_sum_identity_truncated, ode_integration_oracle, ode_residual, ode_residual_perturbed,
    q_reduction_control, q_reduction_residual, ResidualReport,
};
use krsol::{Error, Result};

use crate::config::{
    resolve_profile, resolve_quotient, resolve_sweep, FileConfig, ProfileParams,
};
use crate::report::{
    CheckReport, GridSummary, QuotientReport, RunReport, SweepReport, SweepRow, SCHEMA_VERSION,
};

/// Regime selection: the compact flag wins, otherwise the sign of lambda.
pub fn classify(geometry: &Geometry, compact: bool) -> SolitonCase {
    if compact {
        SolitonCase::CompactShrinking
    } else {
        classify_noncompact(geometry)
    }
}

fn grid_config(profile: &SolitonProfile, params: &ProfileParams) -> GridConfig {
    let mut gc = GridConfig::default_for(profile);
    if let Some(v) = params.phi_min {
        gc.phi_min = v;
    }
    if let Some(v) = params.phi_max {
        gc.phi_max = v;
    }
    if let Some(v) = params.grid_count {
        gc.count = v;
    }
    if let Some(v) = params.anchor_phi {
        gc.anchor = v;
    }
    gc
}

fn retolerance_abs(mut rep: ResidualReport, tol: Option<f64>) -> ResidualReport {
    if let Some(t) = tol {
        rep.tolerance = t;
        rep.pass = rep.max_abs <= t;
    }
    rep
}

fn retolerance_rel(mut rep: ResidualReport, tol: Option<f64>) -> ResidualReport {
    if let Some(t) = tol {
        rep.tolerance = t;
        rep.pass = rep.max_rel <= t;
    }
    rep
}

/// A profile run's document plus the grid it was built on, kept so the
/// binary can write the table without recomputing anything.
#[derive(Debug)]
pub struct ProfileOutcome {
    pub report: RunReport,
    pub grid: ProfileGrid,
}

/// Shared solve/verify pipeline; `deep_checks` adds the negative controls
/// and sampled exact identities that only the verify mode runs.
fn run_profile(cfg: &FileConfig, mode: &str, deep_checks: bool) -> Result<ProfileOutcome> {
    let params = resolve_profile(cfg)?;
    let geometry = params.geometry.clone();
    let case = classify(&geometry, params.compact);
    let profile = SolitonProfile::build(geometry.clone(), case, params.mu)?;

    let gc = grid_config(&profile, &params);
    let grid = ProfileGrid::build(&profile, &gc)?;

    let (asymptotics, closing) = match profile.b1 {
        Some(_) => (None, Some(grid.closing_data()?)),
        None => (Some(grid.asymptotic_data()?), None),
    };

    let phis = default_residual_phis(&profile, 1000);
    let mut residuals = Vec::new();
    residuals.push(retolerance_abs(
        ode_residual(&profile, &phis)?,
        params.tol_ode_residual,
    ));
    let oracle_hi = match profile.b1 {
        Some(b1) => b1 * (1.0 - 1e-4),
        None => 1e2,
    };
    residuals.push(retolerance_rel(
        ode_integration_oracle(&profile, 1e-4, oracle_hi)?,
        params.tol_ode_oracle,
    ));
    residuals.push(q_reduction_residual(&grid)?);
    residuals.push(finite_sum_identity_residual(&geometry, profile.mu, &phis)?);

    let mut checks = Vec::new();
    if let Some(b1) = profile.b1 {
        // The boundary conditions that close the metric smoothly, evaluated
        // on the closed form itself rather than the series built from them.
        let (f_b1, fp_b1) = profile.f_eval_branch(b1, EvalBranch::Direct)?;
        checks.push(CheckReport {
            name: "closing_endpoint".into(),
            pass: f_b1.abs() <= 1e-10 && (fp_b1 + 1.0).abs() <= 1e-8,
            detail: format!(
                "|F(b1)| = {:.3e}, |F'(b1) + 1| = {:.3e}",
                f_b1.abs(),
                (fp_b1 + 1.0).abs()
            ),
        });
    }
    if deep_checks {
        let perturbed = ode_residual_perturbed(&profile, &phis, 0.1)?;
        checks.push(CheckReport {
            name: "ode_residual_perturbed_control".into(),
            pass: !perturbed.pass,
            detail: format!(
                "shifted soliton constant leaves max residual {:.3e}, expected above {:.1e}",
                perturbed.max_abs, perturbed.tolerance
            ),
        });
        let control = q_reduction_control(&grid)?;
        checks.push(CheckReport {
            name: "q_reduction_control".into(),
            pass: !control.pass,
            detail: format!(
                "mismatched reduction leaves max residual {:.3e}, expected above {:.1e}",
                control.max_abs, control.tolerance
            ),
        });
        let top_nonzero = !profile.h.polys[profile.h.len() - 1].is_zero();
        if top_nonzero {
            let truncated = finite_sum_identity_truncated(&geometry, profile.mu, &phis)?;
            checks.push(CheckReport {
                name: "finite_sum_identity_truncated_control".into(),
                pass: !truncated.pass,
                detail: format!(
                    "dropping the top derivative order leaves max residual {:.3e}",
                    truncated.max_abs
                ),
            });
        }
        checks.push(exact_identity_sample_check(params.seed)?);
        residuals.push(legendre_sample_report(params.seed));
    }

    let (scan_lo, scan_hi) = match profile.b1 {
        Some(b1) => (gc.phi_min.min(1e-6), b1 * (1.0 - 1e-9)),
        None => (gc.phi_min.min(1e-6), gc.phi_max.max(1e3)),
    };
    let root_scan = profile.root_scan(scan_lo, scan_hi, 2000)?;
    let positivity = root_scan.roots.is_empty();

    let first = grid.rows.first().ok_or_else(|| {
        Error::Inconsistency("grid construction produced no rows".into())
    })?;
    let last = grid.rows.last().expect("nonempty grid has a last row");
    let grid_summary = GridSummary {
        phi_min: gc.phi_min,
        phi_max: gc.phi_max,
        count: gc.count,
        anchor_phi: gc.anchor,
        r_first: first.r,
        r_last: last.r,
    };

    let mut config_echo = cfg.clone();
    config_echo.mode = Some(mode.to_owned());
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        mode: mode.to_owned(),
        config: config_echo,
        case: profile.case.to_string(),
        lambda: geometry.lambda_f64(),
        mu: profile.mu,
        nu: profile.nu,
        b1: profile.b1,
        asymptotics,
        closing,
        grid: grid_summary,
        residuals,
        checks,
        root_scan,
        positivity,
        warnings: profile.warnings.clone(),
        wall_time_ms: 0,
    };
    Ok(ProfileOutcome { report, grid })
}

pub fn run_solve(cfg: &FileConfig) -> Result<ProfileOutcome> {
    run_profile(cfg, "solve", false)
}

pub fn run_verify(cfg: &FileConfig) -> Result<ProfileOutcome> {
    run_profile(cfg, "verify", true)
}

/// Whether every residual and check in the report passed.
pub fn report_clean(report: &RunReport) -> bool {
    report.positivity
        && report.residuals.iter().all(|r| r.pass)
        && report.checks.iter().all(|c| c.pass)
}

/// The exact antiderivative identity on a batch of small random geometries.
fn exact_identity_sample_check(seed: u64) -> Result<CheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut all = true;
    let count = 50;
    for _ in 0..count {
        let d = rng.gen_range(0..=3u32);
        let n = rng.gen_range(1..=3u32);
        let tau = rational(rng.gen_range(-6..=9), rng.gen_range(1..=4));
        let eps = rational(rng.gen_range(0..=4), rng.gen_range(1..=4));
        let g = match Geometry::new(d, n, tau, eps) {
            Ok(g) => g,
            Err(_) => continue,
        };
        let mut mu_num = rng.gen_range(-5..=5i64);
        if mu_num == 0 {
            mu_num = 1;
        }
        let mu = rational(mu_num, rng.gen_range(1..=4));
        if !finite_sum_identity_exact(&g, &mu)? {
            all = false;
        }
    }
    Ok(CheckReport {
        name: "finite_sum_identity_exact_sampled".into(),
        pass: all,
        detail: format!("{count} random geometries checked in exact rational arithmetic"),
    })
}

/// Closed form vs numeric minimization of the fiber potential on a random
/// parameter batch, folded into a residual-shaped report.
fn legendre_sample_report(seed: u64) -> ResidualReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51ce);
    let count = 200;
    let mut max_abs: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    for _ in 0..count {
        let a = rng.gen_range(-6.0..6.0);
        let a_coef = rng.gen_range(0.05..8.0);
        let b_coef = rng.gen_range(0.05..8.0);
        let closed = phi_a_closed(a, a_coef, b_coef).expect("valid parameters");
        let numeric = legendre_numeric(a, a_coef, b_coef).expect("valid parameters");
        let gap = (closed - numeric).abs();
        max_abs = max_abs.max(gap);
        max_rel = max_rel.max(gap / (1.0 + closed.abs()));
    }
    let tolerance = 1e-10;
    ResidualReport {
        name: "legendre_agreement_sampled".into(),
        max_abs,
        max_rel,
        grid_size: count,
        tolerance,
        pass: max_rel <= tolerance,
    }
}

pub fn run_sweep(cfg: &FileConfig) -> Result<SweepReport> {
    let params = resolve_profile(cfg)?;
    if params.compact {
        return Err(Error::InvalidParameter(
            "sweep covers the noncompact free-constant regimes only".into(),
        ));
    }
    let case = classify(&params.geometry, false);
    if !matches!(case, SolitonCase::Steady | SolitonCase::Expanding) {
        return Err(Error::InvalidParameter(format!(
            "sweep needs a steady or expanding geometry (lambda <= 0), got lambda = {}",
            params.geometry.lambda_f64()
        )));
    }
    let range = resolve_sweep(cfg)?;

    let mut samples: Vec<f64> = if range.steps == 1 {
        vec![range.mu_min]
    } else {
        (0..range.steps)
            .map(|i| {
                range.mu_min + (range.mu_max - range.mu_min) * i as f64 / (range.steps - 1) as f64
            })
            .collect()
    };
    samples.sort_by(f64::total_cmp);

    let mut entries = Vec::with_capacity(samples.len());
    for mu in &samples {
        let mut entry_cfg = cfg.clone();
        entry_cfg.mu = Some(*mu);
        entry_cfg.mu_min = None;
        entry_cfg.mu_max = None;
        entry_cfg.steps = None;
        entries.push(run_profile(&entry_cfg, "solve", false)?.report);
    }

    let mut summary = Vec::with_capacity(entries.len());
    for entry in &entries {
        let c1_or_p = match &entry.asymptotics {
            Some(krsol::metric::AsymptoticData::PowerLaw { p, .. }) => *p,
            Some(krsol::metric::AsymptoticData::Steady { c1, .. }) => *c1,
            None => {
                return Err(Error::Inconsistency(
                    "sweep entry carries no tail data".into(),
                ))
            }
        };
        summary.push(SweepRow {
            mu: entry.mu,
            c1_or_p,
            positive: entry.positivity,
        });
    }

    let mut config_echo = cfg.clone();
    config_echo.mode = Some("sweep".to_owned());
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        mode: "sweep".to_owned(),
        config: config_echo,
        case: case.to_string(),
        summary,
        entries,
        wall_time_ms: 0,
    })
}

pub fn run_quotient(cfg: &FileConfig) -> Result<QuotientReport> {
    let q = resolve_quotient(cfg)?;
    let value_closed = phi_a_closed(q.a, q.a_coef, q.b_coef)?;
    let value_numeric = legendre_numeric(q.a, q.a_coef, q.b_coef)?;
    let critical_r1 = critical_point(q.a, q.a_coef, q.b_coef);
    if let Some(r1) = critical_r1 {
        // The stationary point must actually be stationary.
        let (_, slope) = upstairs_potential(r1, q.a_coef, q.b_coef);
        let scale = q.a.abs() + 2.0 * (q.a_coef * q.b_coef).sqrt() + 1.0;
        if (slope - q.a).abs() > 1e-9 * scale {
            return Err(Error::Inconsistency(format!(
                "potential derivative {slope} misses the momentum level {} at the critical point",
                q.a
            )));
        }
    }
    let gap_abs = (value_closed - value_numeric).abs();
    let gap_rel = gap_abs / (1.0 + value_closed.abs());
    let cone_value = 2.0 * (q.a_coef * q.b_coef).sqrt();
    let mut config_echo = cfg.clone();
    config_echo.mode = Some("quotient".to_owned());
    Ok(QuotientReport {
        schema_version: SCHEMA_VERSION,
        mode: "quotient".to_owned(),
        config: config_echo,
        a: q.a,
        a_coef: q.a_coef,
        b_coef: q.b_coef,
        value_closed,
        value_numeric,
        critical_r1,
        gap_abs,
        gap_rel,
        cone_value,
        pass: gap_abs <= 1e-10 * (1.0 + value_closed.abs()),
        wall_time_ms: 0,
    })
}

/// Stationary point of the fiber potential in the log coordinate, when one
/// exists (the B = 0, a = 0 corner has none).
fn critical_point(a: f64, a_coef: f64, b_coef: f64) -> Option<f64> {
    if b_coef == 0.0 {
        if a == 0.0 {
            return None;
        }
        return Some((a / a_coef).ln());
    }
    let r = (a * a + 4.0 * a_coef * b_coef).sqrt();
    let ex = if a >= 0.0 {
        (a + r) / (2.0 * a_coef)
    } else {
        2.0 * b_coef / (r - a)
    };
    Some(ex.ln())
}
