//! Platoon-level outputs: fuel-reduction ratios per position and platoon
//! average, versus distance or time gap, plus headway and saturation-flow
//! figures.

use serde::{Deserialize, Serialize};

use crate::drag;
use crate::error::{Error, Result};
use crate::fuel::{self, DrivingState, Environment};
use crate::types::{DragModel, PlatoonConfig, VehicleSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    GapM,
    TimeS,
}

impl std::fmt::Display for Abscissa {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Abscissa::GapM => write!(f, "gap_m"),
            Abscissa::TimeS => write!(f, "time_s"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub x: f64,
    /// Fuel-reduction ratio of each vehicle slot, lead first.
    pub per_position: Vec<f64>,
    pub average: f64,
}

/// Sampled savings curve with enough metadata to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsCurve {
    pub abscissa: Abscissa,
    pub speed_kmh: f64,
    pub platoon_size: u32,
    pub vehicle: String,
    pub samples: Vec<CurveSample>,
}

/// Fuel-reduction ratio `(F - F_inf) / F_inf` of one vehicle at a steady
/// cruise; negative values are savings. Exactly 0 at and beyond the model's
/// breakpoint, where the drag ratio is 1.
pub fn fuel_reduction(
    spec: &VehicleSpec,
    model: &DragModel,
    gap_m: f64,
    speed_kmh: f64,
    env: &Environment,
) -> Result<f64> {
    let state = DrivingState::steady(speed_kmh);
    let ratio = drag::drag_ratio(model, gap_m)?;
    let f_inf = fuel::fuel_rate(spec, fuel::power_kw(spec, spec.cd_infinity, &state, env));
    if ratio == 1.0 {
        return Ok(0.0);
    }
    let cd = spec.cd_infinity * ratio;
    let f = fuel::fuel_rate(spec, fuel::power_kw(spec, cd, &state, env));
    Ok((f - f_inf) / f_inf)
}

/// Fuel-reduction ratio of every slot in the platoon, lead first.
pub fn per_position_reductions(config: &PlatoonConfig, env: &Environment) -> Result<Vec<f64>> {
    let gap = config.gap_m();
    (1..=config.size)
        .map(|slot| {
            fuel_reduction(
                &config.vehicle,
                config.model_for_slot(slot),
                gap,
                config.speed_kmh,
                env,
            )
        })
        .collect()
}

/// Unweighted arithmetic mean of the per-slot reductions.
pub fn platoon_average_reduction(config: &PlatoonConfig, env: &Environment) -> Result<f64> {
    let reductions = per_position_reductions(config, env)?;
    Ok(reductions.iter().sum::<f64>() / reductions.len() as f64)
}

/// Distance gap implied by a time gap at a given speed: `t * v / 3.6`.
pub fn time_gap_transform(gap_time_s: f64, speed_kmh: f64) -> f64 {
    gap_time_s * speed_kmh / 3.6
}

/// Front-bumper-to-front-bumper headway and the saturation flow it implies:
/// `headway = (L + t*v_ms) / v_ms`, `flow = 3600 / headway`.
pub fn headway_and_flow(spec: &VehicleSpec, gap_time_s: f64, speed_kmh: f64) -> (f64, f64) {
    let v_ms = speed_kmh / 3.6;
    let headway_s = (spec.length_m + gap_time_s * v_ms) / v_ms;
    (headway_s, 3600.0 / headway_s)
}

/// Dense sampling of the per-position and average reductions over a range
/// of the chosen abscissa. The range must stay within ten times the largest
/// model breakpoint; beyond that everything is identically zero.
pub fn savings_curve(
    config: &PlatoonConfig,
    abscissa: Abscissa,
    range: (f64, f64),
    step: f64,
    env: &Environment,
) -> Result<SavingsCurve> {
    let (start, end) = range;
    if !(start > 0.0 && end > start && step > 0.0) {
        return Err(Error::invalid(format!(
            "curve range must satisfy 0 < start < end with a positive step, got ({start}, {end}) step {step}"
        )));
    }
    let max_bp = config
        .models
        .values()
        .map(drag::effective_breakpoint)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0f64, f64::max);
    let end_gap = match abscissa {
        Abscissa::GapM => end,
        Abscissa::TimeS => time_gap_transform(end, config.speed_kmh),
    };
    if end_gap > 10.0 * max_bp {
        return Err(Error::invalid(format!(
            "curve extends to a gap of {end_gap:.1} m, past ten times the largest breakpoint ({max_bp:.1} m)"
        )));
    }

    let mut samples = Vec::new();
    let mut k = 0usize;
    loop {
        let x = start + step * k as f64;
        if x > end + 1e-12 {
            break;
        }
        let gap = match abscissa {
            Abscissa::GapM => x,
            Abscissa::TimeS => time_gap_transform(x, config.speed_kmh),
        };
        let per_position: Vec<f64> = (1..=config.size)
            .map(|slot| {
                fuel_reduction(
                    &config.vehicle,
                    config.model_for_slot(slot),
                    gap,
                    config.speed_kmh,
                    env,
                )
            })
            .collect::<Result<_>>()?;
        let average = per_position.iter().sum::<f64>() / per_position.len() as f64;
        samples.push(CurveSample {
            x,
            per_position,
            average,
        });
        k += 1;
    }

    Ok(SavingsCurve {
        abscissa,
        speed_kmh: config.speed_kmh,
        platoon_size: config.size,
        vehicle: config.vehicle.name.clone(),
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::types::{GapSpec, Position};

    fn platoon(vehicle: &str, class: crate::types::VehicleClass, size: u32) -> PlatoonConfig {
        let spec = fixtures::vehicle(vehicle).unwrap();
        let models = fixtures::models_for(class, size.min(3));
        PlatoonConfig::new(spec, size, 100.0, GapSpec::TimeS(0.5), models).unwrap()
    }

    #[test]
    fn time_gap_arithmetic() {
        assert!((time_gap_transform(0.5, 100.0) - 13.88888888888889).abs() < 1e-12);
        assert!((time_gap_transform(2.0, 100.0) - 55.55555555555556).abs() < 1e-12);
        assert!((time_gap_transform(1.0, 3.6) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn headways_and_flows_at_half_second() {
        let ldv = fixtures::vehicle("ldv-lumina").unwrap();
        let (h, q) = headway_and_flow(&ldv, 0.5, 100.0);
        assert!((h - 0.678272).abs() < 1e-9);
        assert!((q - 5307.605208529911).abs() < 1e-6);

        let bus = fixtures::vehicle("bus-s80").unwrap();
        let (h, q) = headway_and_flow(&bus, 0.5, 100.0);
        assert!((h - 0.932).abs() < 1e-9);
        assert!((q - 3862.660944206009).abs() < 1e-6);

        let hdt = fixtures::vehicle("hdt-vnl670").unwrap();
        let (h, q) = headway_and_flow(&hdt, 0.5, 100.0);
        assert!((h - 1.31756).abs() < 1e-9);
        assert!((q - 2732.323385652266).abs() < 1e-6);
    }

    #[test]
    fn reduction_vanishes_beyond_the_breakpoint() {
        let spec = fixtures::vehicle("ldv-a").unwrap();
        let model = fixtures::reference_model(crate::types::VehicleClass::Ldv, 2, Position::Trail)
            .unwrap();
        let r = fuel_reduction(&spec, &model, 200.0, 100.0, &Environment::default()).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn two_ldv_trail_savings_at_ten_meters() {
        // Around -6% for the trailing car of a pair at a 10 m gap.
        let spec = fixtures::vehicle("ldv-b").unwrap();
        let model = fixtures::reference_model(crate::types::VehicleClass::Ldv, 2, Position::Trail)
            .unwrap();
        let r = fuel_reduction(&spec, &model, 10.0, 100.0, &Environment::default()).unwrap();
        assert!((r - -0.07379570386399184).abs() < 1e-12, "r = {r}");
        assert!((r * 100.0 - -6.0).abs() <= 1.5);
    }

    #[test]
    fn two_bus_trail_savings_at_fifty_meters() {
        // Around -15% for the trailing bus of a pair at a 50 m gap.
        let spec = fixtures::vehicle("bus-m").unwrap();
        let model = fixtures::reference_model(crate::types::VehicleClass::Bus, 2, Position::Trail)
            .unwrap();
        let r = fuel_reduction(&spec, &model, 50.0, 100.0, &Environment::default()).unwrap();
        assert!((r - -0.1372815554267477).abs() < 1e-12, "r = {r}");
        assert!((r * 100.0 - -15.0).abs() <= 2.0);
    }

    #[test]
    fn averages_match_the_oracle_values() {
        let env = Environment::default();
        let cases = [
            ("ldv-a", crate::types::VehicleClass::Ldv, -0.035040),
            ("bus-m", crate::types::VehicleClass::Bus, -0.145250),
            ("hdt-x", crate::types::VehicleClass::Hdt, -0.070480),
        ];
        for (name, class, expected) in cases {
            let config = platoon(name, class, 3);
            let avg = platoon_average_reduction(&config, &env).unwrap();
            assert!(
                (avg - expected).abs() < 5e-5,
                "{name}: {avg} vs {expected}"
            );
        }
    }

    #[test]
    fn average_is_the_arithmetic_mean_and_bounded_by_extremes() {
        let env = Environment::default();
        let config = platoon("hdt-x", crate::types::VehicleClass::Hdt, 4);
        let per = per_position_reductions(&config, &env).unwrap();
        let avg = platoon_average_reduction(&config, &env).unwrap();
        let mean = per.iter().sum::<f64>() / per.len() as f64;
        assert!((avg - mean).abs() < 1e-15);
        let min = per.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = per.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(avg >= min - 1e-15 && avg <= max + 1e-15);
    }

    #[test]
    fn beyond_all_breakpoints_the_average_is_zero() {
        let env = Environment::default();
        let spec = fixtures::vehicle("ldv-a").unwrap();
        let models = fixtures::models_for(crate::types::VehicleClass::Ldv, 3);
        let config =
            PlatoonConfig::new(spec, 3, 100.0, GapSpec::DistanceM(500.0), models).unwrap();
        assert_eq!(platoon_average_reduction(&config, &env).unwrap(), 0.0);
    }

    #[test]
    fn curve_samples_agree_with_pointwise_calls() {
        let env = Environment::default();
        let config = platoon("hdt-x", crate::types::VehicleClass::Hdt, 3);
        let curve = savings_curve(&config, Abscissa::TimeS, (0.25, 3.0), 0.25, &env).unwrap();
        assert_eq!(curve.samples.len(), 12);
        for s in &curve.samples {
            assert!(s.per_position.iter().all(|r| (-1.0..1.0).contains(r)));
            let gap = time_gap_transform(s.x, 100.0);
            for (slot, &r) in s.per_position.iter().enumerate() {
                let expect = fuel_reduction(
                    &config.vehicle,
                    config.model_for_slot(slot as u32 + 1),
                    gap,
                    100.0,
                    &env,
                )
                .unwrap();
                assert!((r - expect).abs() < 1e-15);
            }
        }
        // Three-truck average crosses about -7% at a half-second gap.
        let at_half = &curve.samples[1];
        assert!((at_half.x - 0.5).abs() < 1e-12);
        assert!((at_half.average * 100.0 - -7.0).abs() <= 1.5);
    }

    #[test]
    fn savings_magnitude_shrinks_with_gap_beyond_the_data_floor() {
        let env = Environment::default();
        let config = platoon("bus-m", crate::types::VehicleClass::Bus, 3);
        let curve = savings_curve(&config, Abscissa::GapM, (5.0, 400.0), 5.0, &env).unwrap();
        for w in curve.samples.windows(2) {
            assert!(
                w[1].average >= w[0].average - 1e-12,
                "average became more negative from x = {}",
                w[0].x
            );
        }
    }

    #[test]
    fn lead_savings_vanish_before_trail_savings() {
        let env = Environment::default();
        for (class, name) in [
            (crate::types::VehicleClass::Ldv, "ldv-a"),
            (crate::types::VehicleClass::Bus, "bus-m"),
            (crate::types::VehicleClass::Hdt, "hdt-x"),
        ] {
            let lead = fixtures::reference_model(class, 2, Position::Lead).unwrap();
            let trail = fixtures::reference_model(class, 2, Position::Trail).unwrap();
            let lead_bp = drag::effective_breakpoint(&lead).unwrap();
            let trail_bp = drag::effective_breakpoint(&trail).unwrap();
            assert!(lead_bp < trail_bp, "{name}: {lead_bp} !< {trail_bp}");
            let spec = fixtures::vehicle(name).unwrap();
            let mid = 0.5 * (lead_bp + trail_bp);
            let lr = fuel_reduction(&spec, &lead, mid, 100.0, &env).unwrap();
            let tr = fuel_reduction(&spec, &trail, mid, 100.0, &env).unwrap();
            assert_eq!(lr, 0.0);
            assert!(tr < 0.0);
        }
    }

    #[test]
    fn out_of_range_curves_are_rejected() {
        let env = Environment::default();
        let config = platoon("ldv-a", crate::types::VehicleClass::Ldv, 3);
        assert!(savings_curve(&config, Abscissa::GapM, (0.0, 10.0), 1.0, &env).is_err());
        assert!(savings_curve(&config, Abscissa::GapM, (1.0, 1e6), 1.0, &env).is_err());
    }
}
