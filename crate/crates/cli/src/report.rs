//! Report documents emitted by every mode, plus the CSV table writers.
//!
//! Reports are deterministic: the same configuration produces byte-identical
//! output, so `wall_time_ms` is always 0 in the document itself.

use serde::{Deserialize, Serialize};

use krsol::metric::{AsymptoticData, ClosingData, ProfileGrid};
use krsol::profile::RootScan;
use krsol::verify::ResidualReport;

pub const SCHEMA_VERSION: u32 = 1;

/// A named pass/fail check that is not residual-shaped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSummary {
    pub phi_min: f64,
    pub phi_max: f64,
    pub count: usize,
    pub anchor_phi: f64,
    pub r_first: f64,
    pub r_last: f64,
}

/// Full outcome of a solve or verify run for one profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub mode: String,
    pub config: crate::config::FileConfig,
    pub case: String,
    pub lambda: f64,
    pub mu: f64,
    pub nu: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub asymptotics: Option<AsymptoticData>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closing: Option<ClosingData>,
    pub grid: GridSummary,
    pub residuals: Vec<ResidualReport>,
    pub checks: Vec<CheckReport>,
    pub root_scan: RootScan,
    pub positivity: bool,
    pub warnings: Vec<String>,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    /// Power-law exponent `p` for expanders, linear coefficient `c1` for
    /// steadies — whichever leading tail datum the case carries.
    pub c1_or_p: f64,
    pub positive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub mode: String,
    pub config: crate::config::FileConfig,
    pub case: String,
    pub summary: Vec<SweepRow>,
    pub entries: Vec<RunReport>,
    pub wall_time_ms: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuotientReport {
    pub schema_version: u32,
    pub mode: String,
    pub config: crate::config::FileConfig,
    pub a: f64,
    #[serde(rename = "A")]
    pub a_coef: f64,
    #[serde(rename = "B")]
    pub b_coef: f64,
    pub value_closed: f64,
    pub value_numeric: f64,
    /// Stationary point of the upstairs potential, absent in the degenerate
    /// `B = 0, a = 0` corner where the value is 0 by convention.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_r1: Option<f64>,
    pub gap_abs: f64,
    pub gap_rel: f64,
    /// Cone-potential value `2 sqrt(A B)` the closed form degenerates to at a = 0.
    pub cone_value: f64,
    pub pass: bool,
    pub wall_time_ms: u64,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Profile table: one row per grid point, eigenvalues included.
pub fn profile_table_csv(grid: &ProfileGrid) -> krsol::Result<String> {
    let mut out = String::from(
        "phi,r,s,F,P,eig_horizontal,eig_fiber_tangential,eig_fiber_radial\n",
    );
    for row in &grid.rows {
        let eig = grid.metric_eigenvalues(row.phi)?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt(row.phi),
            fmt(row.r),
            fmt(row.s),
            fmt(row.f),
            fmt(row.p),
            fmt(eig.horizontal),
            fmt(eig.fiber_tangential),
            fmt(eig.fiber_radial),
        ));
    }
    Ok(out)
}

/// Sweep summary table: one row per swept soliton constant.
pub fn sweep_table_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("mu,c1_or_p,positive\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            fmt(row.mu),
            fmt(row.c1_or_p),
            row.positive
        ));
    }
    out
}
