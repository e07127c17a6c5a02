//! Command-line front-end: fit drag models from measurement CSVs, invert
//! fuel data, sample savings curves, and re-check the bundled reference
//! figures.
//!
//! Exit codes: 0 success, 2 parse/input error, 4 solver non-convergence,
//! 3 any other invalid problem or domain error, 5 reproduction mismatch.
//! Errors are mirrored as a one-line JSON object on stderr.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use platoon_core::Error;

#[derive(Debug, Parser)]
#[command(
    name = "platoon",
    about = "Gap-dependent platoon drag models and fuel-savings analysis",
    version
)]
struct Cli {
    /// TOML file with default settings (solver limits, environment).
    /// Environment variables are never consulted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit a drag-ratio power law to a measurement CSV.
    ///
    /// Drag data uses columns `gap_m,ratio`; fuel data uses
    /// `gap_m,fuel_ratio,speed_kmh` and is inverted with --spec first.
    Fit(FitArgs),
    /// Convert a fuel-ratio CSV into an equivalent drag-ratio CSV.
    Invert(InvertArgs),
    /// Sample fuel-reduction curves for a platoon.
    ///
    /// CSV columns: the abscissa (gap_m or time_s), one fuel-reduction
    /// column per vehicle slot (pos1..posN, lead first), then the
    /// platoon average.
    Curve(CurveArgs),
    /// Re-check bundled reference figures; exits 5 on any mismatch.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Measurement CSV (drag or fuel layout).
    #[arg(long)]
    data: PathBuf,
    /// Vehicle record; required to invert fuel data.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Fuel-scale parameter used during inversion.
    #[arg(long)]
    n: Option<f64>,
    /// Treat the critical gap as a free parameter.
    #[arg(long = "include-go")]
    include_g_o: bool,
    /// Box constraint on the critical gap (implies --include-go).
    #[arg(long = "go-bounds", num_args = 2, value_names = ["LOWER_M", "UPPER_M"])]
    g_o_bounds: Option<Vec<f64>>,
    /// Position stamped onto the fitted model.
    #[arg(long, value_enum, default_value_t = PositionArg::Trail)]
    position: PositionArg,
    /// Platoon size stamped onto the fitted model.
    #[arg(long, default_value_t = 2)]
    size: u32,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Convergence threshold applied to gradient, step and cost.
    #[arg(long)]
    tol: Option<f64>,
    /// Where to write the fitted model (TOML).
    #[arg(long, default_value = "model.toml")]
    out: PathBuf,
    /// Where to write the fit report (JSON); defaults next to --out.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Where to write the run manifest; defaults next to --out.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct InvertArgs {
    /// Fuel-ratio CSV.
    #[arg(long)]
    data: PathBuf,
    /// Vehicle record used for the inversion.
    #[arg(long)]
    spec: PathBuf,
    /// Test speed override when the CSV has no speed column.
    #[arg(long)]
    speed: Option<f64>,
    /// Fuel-scale parameter.
    #[arg(long)]
    n: Option<f64>,
    /// Where to write the drag-ratio CSV.
    #[arg(long, default_value = "drag_ratios.csv")]
    out: PathBuf,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    /// Vehicle record.
    #[arg(long)]
    spec: PathBuf,
    /// Drag models covering the platoon positions.
    #[arg(long)]
    models: PathBuf,
    #[arg(long, default_value_t = 100.0)]
    speed: f64,
    /// Platoon size.
    #[arg(long, default_value_t = 3)]
    size: u32,
    #[arg(long, value_enum, default_value_t = AbscissaArg::Gap)]
    abscissa: AbscissaArg,
    /// Sampling range of the abscissa.
    #[arg(long, num_args = 2, value_names = ["START", "END"])]
    range: Vec<f64>,
    #[arg(long)]
    step: f64,
    /// Where to write the curve CSV.
    #[arg(long, default_value = "curve.csv")]
    out: PathBuf,
    /// Also write the curve as a JSON document with metadata.
    #[arg(long)]
    json: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    target: ReproduceTarget,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReproduceTarget {
    Table2,
    Headways,
    SavingsSummary,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PositionArg {
    Lead,
    Middle,
    Trail,
}

impl From<PositionArg> for platoon_core::types::Position {
    fn from(p: PositionArg) -> Self {
        match p {
            PositionArg::Lead => Self::Lead,
            PositionArg::Middle => Self::Middle,
            PositionArg::Trail => Self::Trail,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AbscissaArg {
    Gap,
    Time,
}

impl From<AbscissaArg> for platoon_core::analysis::Abscissa {
    fn from(a: AbscissaArg) -> Self {
        match a {
            AbscissaArg::Gap => Self::GapM,
            AbscissaArg::Time => Self::TimeS,
        }
    }
}

/// Failure with its process exit code already decided.
pub(crate) struct CliError {
    code: u8,
    category: &'static str,
    message: String,
}

impl CliError {
    fn new(code: u8, category: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            category,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let (code, category) = match e.category() {
            "parse" => (2, "parse"),
            "non-convergence" => (4, "non-convergence"),
            _ => (3, "invalid-problem"),
        };
        CliError::new(code, category, e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new(2, "parse", e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match commands::load_config(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let result = match cli.command {
        Command::Fit(args) => commands::fit(args, &config),
        Command::Invert(args) => commands::invert(args, &config),
        Command::Curve(args) => commands::curve(args, &config),
        Command::Reproduce(args) => commands::reproduce(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!(
        "{}",
        serde_json::json!({ "category": e.category, "message": e.message })
    );
    ExitCode::from(e.code)
}
