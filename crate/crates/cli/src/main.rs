//! `krsol` binary: argument parsing, config merging, report emission, and
//! exit-code mapping around the mode drivers in the library crate.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use krsol::Error;
use krsol_cli::config::{FileConfig, NumOrStr};
use krsol_cli::report::{profile_table_csv, sweep_table_csv};
use krsol_cli::run;

#[derive(Debug, Parser)]
#[command(
    name = "krsol",
    version,
    about = "Rotationally symmetric Kahler-Ricci soliton profiles: solve, verify, sweep, and the quotient potential"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Solve one profile and emit its report
    Solve(CommonArgs),
    /// Solve one profile and run the full verification battery on it
    Verify(CommonArgs),
    /// Sweep the free soliton constant over a strictly negative range
    Sweep(SweepArgs),
    /// Evaluate the quotient fiber potential, closed form against numeric
    Quotient(QuotientArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON configuration document; flags override its fields
    config: Option<PathBuf>,
    /// Base dimension d
    #[arg(long)]
    d: Option<u32>,
    /// Fiber rank n
    #[arg(long)]
    n: Option<u32>,
    /// Einstein constant of the base, as an integer, p/q, or decimal
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    /// Twisting parameter, as an integer, p/q, or decimal
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<String>,
    /// Work on the projective compactification instead of the total space
    #[arg(long)]
    compact: bool,
    /// Soliton constant; required for steady and expanding profiles
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Lower end of the evaluation grid
    #[arg(long)]
    phi_min: Option<f64>,
    /// Upper end of the evaluation grid
    #[arg(long)]
    phi_max: Option<f64>,
    /// Number of grid points
    #[arg(long)]
    grid: Option<usize>,
    /// Profile value where the radial coordinate is anchored to zero
    #[arg(long)]
    anchor_phi: Option<f64>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out_report: Option<String>,
    /// Write the profile table as CSV here
    #[arg(long)]
    out_table: Option<String>,
    /// Seed for the sampled checks
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn overlay(&self) -> FileConfig {
        FileConfig {
            d: self.d,
            n: self.n,
            tau: self.tau.as_deref().map(NumOrStr::from),
            eps: self.eps.as_deref().map(NumOrStr::from),
            compact: if self.compact { Some(true) } else { None },
            mu: self.mu,
            phi_min: self.phi_min,
            phi_max: self.phi_max,
            grid_count: self.grid,
            anchor_phi: self.anchor_phi,
            out_report: self.out_report.clone(),
            out_table: self.out_table.clone(),
            seed: self.seed,
            ..FileConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Bottom of the soliton-constant range (most negative)
    #[arg(long, allow_negative_numbers = true)]
    mu_min: Option<f64>,
    /// Top of the soliton-constant range, still negative
    #[arg(long, allow_negative_numbers = true)]
    mu_max: Option<f64>,
    /// Number of evenly spaced samples across the range
    #[arg(long)]
    steps: Option<usize>,
}

impl SweepArgs {
    fn overlay(&self) -> FileConfig {
        FileConfig {
            mu_min: self.mu_min,
            mu_max: self.mu_max,
            steps: self.steps,
            ..self.common.overlay()
        }
    }
}

#[derive(Debug, Args)]
struct QuotientArgs {
    /// JSON configuration document; flags override its fields
    config: Option<PathBuf>,
    /// Momentum level
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Base factor A = 1 + |u|^2, given directly
    #[arg(long = "A", allow_negative_numbers = true)]
    a_coef: Option<f64>,
    /// Fiber factor B = |xi|^2, given directly
    #[arg(long = "B", allow_negative_numbers = true)]
    b_coef: Option<f64>,
    /// |u|^2, from which A = 1 + |u|^2
    #[arg(long, allow_negative_numbers = true)]
    u_norm2: Option<f64>,
    /// |xi|^2, used as B
    #[arg(long, allow_negative_numbers = true)]
    xi_norm2: Option<f64>,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out_report: Option<String>,
    /// Seed for the sampled checks
    #[arg(long)]
    seed: Option<u64>,
}

impl QuotientArgs {
    fn overlay(&self) -> FileConfig {
        FileConfig {
            a: self.a,
            a_coef: self.a_coef,
            b_coef: self.b_coef,
            u_norm2: self.u_norm2,
            xi_norm2: self.xi_norm2,
            out_report: self.out_report.clone(),
            seed: self.seed,
            ..FileConfig::default()
        }
    }
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Io(std::io::Error),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(e) => match e {
                Error::InvalidGeometry(_) | Error::InvalidParameter(_) | Error::Domain(_) => {
                    ExitCode::from(2)
                }
                Error::SolverFailure(_) => ExitCode::from(3),
                Error::Positivity(_) | Error::Inconsistency(_) => ExitCode::from(4),
            },
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Solve(args) => profile_mode(&args, false),
        Cmd::Verify(args) => profile_mode(&args, true),
        Cmd::Sweep(args) => sweep_mode(&args),
        Cmd::Quotient(args) => quotient_mode(&args),
    }
}

fn load_merged(path: &Option<PathBuf>, overlay: FileConfig) -> Result<FileConfig, CliError> {
    let base = match path {
        Some(p) => {
            let text = fs::read_to_string(p)?;
            FileConfig::from_json(&text)?
        }
        None => FileConfig::default(),
    };
    Ok(base.merged(overlay))
}

fn emit_json<T: Serialize>(doc: &T, path: Option<&str>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(doc).expect("report serializes");
    text.push('\n');
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn profile_mode(args: &CommonArgs, deep: bool) -> Result<ExitCode, CliError> {
    let cfg = load_merged(&args.config, args.overlay())?;
    let outcome = if deep {
        run::run_verify(&cfg)?
    } else {
        run::run_solve(&cfg)?
    };
    emit_json(&outcome.report, cfg.out_report.as_deref())?;
    if let Some(path) = cfg.out_table.as_deref() {
        fs::write(path, profile_table_csv(&outcome.grid)?)?;
    }
    // Solve gates on the hard assertions (positivity, closing endpoint);
    // verify additionally treats any failing residual or control as a
    // violation.
    let clean = if deep {
        run::report_clean(&outcome.report)
    } else {
        outcome.report.positivity && outcome.report.checks.iter().all(|c| c.pass)
    };
    Ok(if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    })
}

fn sweep_mode(args: &SweepArgs) -> Result<ExitCode, CliError> {
    let cfg = load_merged(&args.common.config, args.overlay())?;
    let report = run::run_sweep(&cfg)?;
    emit_json(&report, cfg.out_report.as_deref())?;
    if let Some(path) = cfg.out_table.as_deref() {
        fs::write(path, sweep_table_csv(&report.summary))?;
    }
    Ok(if report.summary.iter().all(|row| row.positive) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    })
}

fn quotient_mode(args: &QuotientArgs) -> Result<ExitCode, CliError> {
    let cfg = load_merged(&args.config, args.overlay())?;
    if cfg.out_table.is_some() {
        return Err(CliError::Core(Error::InvalidParameter(
            "the quotient mode emits no table; drop out_table".into(),
        )));
    }
    let report = run::run_quotient(&cfg)?;
    emit_json(&report, cfg.out_report.as_deref())?;
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(4)
    })
}
