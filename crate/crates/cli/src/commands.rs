//! Implementations of the subcommands.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use platoon_core::analysis;
use platoon_core::fit::{fit_bounded, fit_unconstrained, FitProblem, Tolerances};
use platoon_core::fuel::Environment;
use platoon_core::invert::series_fuel_to_drag;
use platoon_core::io;
use platoon_core::reproduce;
use platoon_core::types::{GapSpec, MeasurementKind, PlatoonConfig, Position};
use platoon_core::Error;

use crate::manifest::RunManifest;
use crate::{CliError, CurveArgs, FitArgs, InvertArgs, ReproduceArgs, ReproduceTarget};

/// Defaults loadable from a --config file. Flags override these; nothing is
/// ever read from the process environment.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CliConfig {
    pub n: Option<f64>,
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub air_density_kgm3: Option<f64>,
    pub gravity_ms2: Option<f64>,
}

impl CliConfig {
    fn environment(&self) -> Environment {
        let mut env = Environment::default();
        if let Some(rho) = self.air_density_kgm3 {
            env.air_density_kgm3 = rho;
        }
        if let Some(g) = self.gravity_ms2 {
            env.gravity_ms2 = g;
        }
        env
    }
}

pub(crate) fn load_config(path: Option<&Path>) -> Result<CliConfig, CliError> {
    match path {
        None => Ok(CliConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p)?;
            toml::from_str(&text)
                .map_err(|e| CliError::from(Error::parse(0, format!("{}: {e}", p.display()))))
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::from(Error::parse(0, format!("{}: {e}", path.display()))))
}

fn single_vehicle(path: &Path) -> Result<platoon_core::types::VehicleSpec, CliError> {
    let text = read_file(path)?;
    let mut specs = io::read_vehicle_specs(&text)?;
    if specs.len() != 1 {
        return Err(CliError::from(Error::invalid(format!(
            "{} holds {} vehicle records; expected exactly one",
            path.display(),
            specs.len()
        ))));
    }
    Ok(specs.remove(0))
}

pub(crate) fn fit(args: FitArgs, config: &CliConfig) -> Result<(), CliError> {
    let data_text = read_file(&args.data)?;
    let input_digest = io::sha256_hex(data_text.as_bytes());
    let mut series = io::read_series_csv(&data_text)?;
    let mut input_digests = vec![(args.data.display().to_string(), input_digest.clone())];

    if series.kind == MeasurementKind::FuelRatio {
        let spec_path = args.spec.as_deref().ok_or_else(|| {
            CliError::from(Error::invalid(
                "fuel-ratio data needs --spec to invert it into drag ratios",
            ))
        })?;
        let spec = single_vehicle(spec_path)?;
        input_digests.push((
            spec_path.display().to_string(),
            io::sha256_hex(read_file(spec_path)?.as_bytes()),
        ));
        let n = args.n.or(config.n).unwrap_or(1.0);
        series = series_fuel_to_drag(&series, &spec, &config.environment(), n)?;
    }

    let mut problem = FitProblem::new(series);
    problem.include_g_o = args.include_g_o || args.g_o_bounds.is_some();
    problem.position = Position::from(args.position);
    problem.platoon_size = args.size;
    if let Some(iters) = args.max_iter.or(config.max_iterations) {
        problem.max_iterations = iters;
    }
    if let Some(tol) = args.tol.or(config.tolerance) {
        problem.tolerance = Tolerances {
            gradient: tol,
            step: tol,
            cost: tol,
        };
    }
    let result = match args.g_o_bounds.as_deref() {
        Some([lo, hi]) => {
            problem.g_o_bounds = Some((*lo, *hi));
            fit_bounded(&problem)?
        }
        Some(_) => unreachable!("clap enforces two values"),
        None => fit_unconstrained(&problem)?,
    };

    fs::write(&args.out, io::write_drag_model(&result.model))?;
    let report = io::FitReport::new(&result, &input_digest);
    let report_path = args
        .report
        .unwrap_or_else(|| args.out.with_extension("report.json"));
    fs::write(&report_path, report.to_json())?;

    let snapshot = serde_json::json!({
        "include_g_o": problem.include_g_o,
        "g_o_bounds": problem.g_o_bounds,
        "position": problem.position,
        "platoon_size": problem.platoon_size,
        "max_iterations": problem.max_iterations,
        "tolerance": problem.tolerance,
        "n": args.n.or(config.n).unwrap_or(1.0),
    });
    RunManifest::new("fit", input_digests, snapshot)
        .output(&args.out)
        .output(&report_path)
        .write(args.manifest.as_deref(), &args.out)?;

    println!(
        "fitted a={} b={} c={} g_o={:?} rss={:.6e} converged={}",
        result.model.a,
        result.model.b,
        result.model.c,
        result.model.g_o_m,
        result.residual_sum_squares,
        result.converged
    );
    for v in &result.violations {
        eprintln!("warning: fitted model violates {v}");
    }
    if !result.converged {
        return Err(CliError::from(Error::NonConvergence {
            iterations: result.iterations,
            rss: result.residual_sum_squares,
            gradient_norm: f64::NAN,
        }));
    }
    Ok(())
}

pub(crate) fn invert(args: InvertArgs, config: &CliConfig) -> Result<(), CliError> {
    let data_text = read_file(&args.data)?;
    let mut series = io::read_series_csv(&data_text)?;
    if series.kind != MeasurementKind::FuelRatio {
        return Err(CliError::from(Error::invalid(
            "invert expects fuel-ratio data (gap_m,fuel_ratio,speed_kmh)",
        )));
    }
    if series.speed_kmh.is_none() {
        series.speed_kmh = args.speed;
    }
    let spec = single_vehicle(&args.spec)?;
    let n = args.n.or(config.n).unwrap_or(1.0);
    let drag = series_fuel_to_drag(&series, &spec, &config.environment(), n)?;
    fs::write(&args.out, io::write_series_csv(&drag))?;

    RunManifest::new(
        "invert",
        vec![
            (
                args.data.display().to_string(),
                io::sha256_hex(data_text.as_bytes()),
            ),
            (
                args.spec.display().to_string(),
                io::sha256_hex(read_file(&args.spec)?.as_bytes()),
            ),
        ],
        serde_json::json!({
            "n": n,
            "speed_kmh": series.speed_kmh,
            "environment": config.environment(),
        }),
    )
    .output(&args.out)
    .write(args.manifest.as_deref(), &args.out)?;

    println!("wrote {} drag-ratio points to {}", drag.points.len(), args.out.display());
    Ok(())
}

pub(crate) fn curve(args: CurveArgs, config: &CliConfig) -> Result<(), CliError> {
    if args.range.len() != 2 {
        return Err(CliError::from(Error::invalid("--range needs START and END")));
    }
    let (start, end) = (args.range[0], args.range[1]);
    let spec_text = read_file(&args.spec)?;
    let vehicle = single_vehicle(&args.spec)?;
    let models_text = read_file(&args.models)?;
    let models = io::read_drag_models(&models_text)?;
    let map = models
        .iter()
        .map(|m| (m.position, m.clone()))
        .collect::<std::collections::BTreeMap<_, _>>();
    if map.len() != models.len() {
        return Err(CliError::from(Error::invalid(
            "model file repeats a position; one model per position",
        )));
    }

    let abscissa = analysis::Abscissa::from(args.abscissa);
    let gap = match abscissa {
        analysis::Abscissa::GapM => GapSpec::DistanceM(start),
        analysis::Abscissa::TimeS => GapSpec::TimeS(start),
    };
    let platoon = PlatoonConfig::new(vehicle.clone(), args.size, args.speed, gap, map)?;
    let env = config.environment();
    let curve = analysis::savings_curve(&platoon, abscissa, (start, end), args.step, &env)?;

    fs::write(&args.out, io::write_curve_csv(&curve))?;
    let mut outputs = vec![args.out.clone()];
    if let Some(json_path) = &args.json {
        let doc = io::curve_document(&curve, &vehicle, &models);
        fs::write(json_path, serde_json::to_string_pretty(&doc).expect("curve serializes"))?;
        outputs.push(json_path.clone());
    }

    let mut manifest = RunManifest::new(
        "curve",
        vec![
            (
                args.spec.display().to_string(),
                io::sha256_hex(spec_text.as_bytes()),
            ),
            (
                args.models.display().to_string(),
                io::sha256_hex(models_text.as_bytes()),
            ),
        ],
        serde_json::json!({
            "speed_kmh": args.speed,
            "platoon_size": args.size,
            "abscissa": abscissa.to_string(),
            "range": [start, end],
            "step": args.step,
            "environment": env,
        }),
    );
    for out in &outputs {
        manifest = manifest.output(out);
    }
    manifest.write(args.manifest.as_deref(), &args.out)?;

    println!(
        "wrote {} samples ({} .. {} by {}) to {}",
        curve.samples.len(),
        start,
        end,
        args.step,
        args.out.display()
    );
    Ok(())
}

pub(crate) fn reproduce(args: ReproduceArgs) -> Result<(), CliError> {
    let report = match args.target {
        ReproduceTarget::Table2 => reproduce::table2(),
        ReproduceTarget::Headways => reproduce::headways(),
        ReproduceTarget::SavingsSummary => reproduce::savings_summary(),
    }?;
    for item in &report.items {
        println!(
            "{} {}: computed {:.6} expected {:.6} (tol {:.6})",
            if item.pass { "PASS" } else { "FAIL" },
            item.label,
            item.computed,
            item.expected,
            item.tolerance
        );
    }
    if report.passed() {
        println!("{}: all {} checks passed", report.target, report.items.len());
        Ok(())
    } else {
        let failed = report.items.iter().filter(|i| !i.pass).count();
        Err(CliError::new(
            5,
            "reproduction-mismatch",
            format!("{}: {failed} of {} checks failed", report.target, report.items.len()),
        ))
    }
}
