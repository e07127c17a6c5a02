//! Self-checks against the bundled reference figures: re-fits every bundled
//! dataset and compares against the reference model rows, and recomputes
//! the headway/flow and savings-summary numbers.

use serde::Serialize;

use crate::analysis;
use crate::error::{Error, Result};
use crate::fit::{fit_bounded, fit_unconstrained, BoundSide, FitProblem};
use crate::fixtures::{self, FitSetup};
use crate::fuel::Environment;
use crate::invert;
use crate::types::{GapSpec, MeasurementKind, PlatoonConfig, VehicleClass};

#[derive(Debug, Clone, Serialize)]
pub struct LineItem {
    pub label: String,
    pub computed: f64,
    pub expected: f64,
    /// Absolute tolerance on `computed - expected`.
    pub tolerance: f64,
    pub pass: bool,
}

impl LineItem {
    fn check(label: impl Into<String>, computed: f64, expected: f64, tolerance: f64) -> Self {
        LineItem {
            label: label.into(),
            computed,
            expected,
            tolerance,
            pass: (computed - expected).abs() <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub target: String,
    pub items: Vec<LineItem>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }
}

/// Runs one bundled fit setup and returns the fit result.
pub fn run_setup(setup: &FitSetup) -> Result<crate::fit::FitResult> {
    let mut series = fixtures::dataset(&setup.dataset)
        .ok_or_else(|| Error::invalid(format!("unknown dataset {}", setup.dataset)))??;
    if series.kind == MeasurementKind::FuelRatio {
        let spec_name = setup
            .invert_with
            .as_deref()
            .ok_or_else(|| Error::invalid("fuel dataset without an inversion vehicle"))?;
        let spec = fixtures::vehicle(spec_name)
            .ok_or_else(|| Error::invalid(format!("unknown vehicle {spec_name}")))?;
        series = invert::series_fuel_to_drag(&series, &spec, &Environment::default(), 1.0)?;
    }
    let mut problem = FitProblem::new(series);
    problem.include_g_o = true;
    problem.position = setup.position;
    problem.platoon_size = setup.platoon_size;
    problem.g_o_bounds = setup.g_o_bounds;
    if setup.g_o_bounds.is_some() {
        fit_bounded(&problem)
    } else {
        fit_unconstrained(&problem)
    }
}

/// Re-fits every bundled dataset and compares the parameters against the
/// reference rows at the per-row tolerances recorded with the setups.
pub fn table2() -> Result<Report> {
    let mut items = Vec::new();
    for setup in fixtures::fit_setups() {
        let result = run_setup(&setup)?;
        let m = &result.model;
        let e = &setup.expect;
        let rel = |computed: f64, expected: f64| {
            if expected == 0.0 {
                computed.abs()
            } else {
                (computed / expected - 1.0).abs()
            }
        };
        items.push(LineItem::check(
            format!("{} a", setup.name),
            rel(m.a, e.a),
            0.0,
            setup.tol_abc_rel,
        ));
        items.push(LineItem::check(
            format!("{} b", setup.name),
            rel(m.b, e.b),
            0.0,
            setup.tol_abc_rel,
        ));
        items.push(LineItem::check(
            format!("{} c", setup.name),
            rel(m.c, e.c),
            0.0,
            setup.tol_abc_rel,
        ));
        if let (Some(expected), Some(tol)) = (e.g_o_m, setup.tol_g_o_rel) {
            let fitted = m.g_o_m.unwrap_or(f64::NAN);
            items.push(LineItem::check(
                format!("{} g_o", setup.name),
                rel(fitted, expected),
                0.0,
                tol,
            ));
        }
        if let Some(g_o) = m.g_o_m {
            let dev = (m.a * g_o.powf(m.b) + m.c - 1.0).abs();
            items.push(LineItem::check(
                format!("{} continuity", setup.name),
                dev,
                0.0,
                crate::types::CONTINUITY_TOL,
            ));
        }
        if let Some(which) = &setup.expect_active_bound {
            let want = match which.as_str() {
                "lower" => BoundSide::Lower,
                _ => BoundSide::Upper,
            };
            items.push(LineItem::check(
                format!("{} {which} bound active", setup.name),
                result.active_bounds.contains(&want) as u8 as f64,
                1.0,
                0.0,
            ));
        }
    }
    Ok(Report {
        target: "table2".into(),
        items,
    })
}

/// Headway and saturation-flow figures at 100 km/h with a half-second gap.
pub fn headways() -> Result<Report> {
    let expectations = [
        ("ldv-lumina", 0.678, 5309.0),
        ("bus-s80", 0.932, 3862.0),
        ("hdt-vnl670", 1.317, 2733.0),
    ];
    let mut items = Vec::new();
    for (name, headway_s, flow) in expectations {
        let spec = fixtures::vehicle(name)
            .ok_or_else(|| Error::invalid(format!("unknown vehicle {name}")))?;
        let (h, q) = analysis::headway_and_flow(&spec, 0.5, 100.0);
        items.push(LineItem::check(format!("{name} headway_s"), h, headway_s, 1e-3));
        items.push(LineItem::check(format!("{name} flow_veh_hr"), q, flow, 2.0));
    }
    Ok(Report {
        target: "headways".into(),
        items,
    })
}

/// Platoon-average reductions for three-vehicle platoons at 100 km/h, in
/// percentage points, at half-second and two-second time gaps.
pub fn savings_summary() -> Result<Report> {
    let cases = [
        ("ldv-a", VehicleClass::Ldv, 0.5, -4.5, 1.5),
        ("bus-m", VehicleClass::Bus, 0.5, -15.5, 2.0),
        ("hdt-x", VehicleClass::Hdt, 0.5, -7.0, 1.5),
        ("ldv-a", VehicleClass::Ldv, 2.0, -0.6, 0.5),
        ("bus-m", VehicleClass::Bus, 2.0, -9.0, 1.5),
        ("hdt-x", VehicleClass::Hdt, 2.0, -4.5, 1.5),
    ];
    let env = Environment::default();
    let mut items = Vec::new();
    for (name, class, time_gap_s, expected_pct, tol_pct) in cases {
        let spec = fixtures::vehicle(name)
            .ok_or_else(|| Error::invalid(format!("unknown vehicle {name}")))?;
        let config = PlatoonConfig::new(
            spec,
            3,
            100.0,
            GapSpec::TimeS(time_gap_s),
            fixtures::models_for(class, 3),
        )?;
        let avg = analysis::platoon_average_reduction(&config, &env)?;
        items.push(LineItem::check(
            format!("{name} 3-platoon avg @ {time_gap_s}s"),
            avg * 100.0,
            expected_pct,
            tol_pct,
        ));
    }
    Ok(Report {
        target: "savings_summary".into(),
        items,
    })
}
