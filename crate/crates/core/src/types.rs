//! Shared domain types and their validation rules.
//!
//! Units are fixed per field and named in the identifiers (kg, m, km/h, s);
//! there is no runtime unit system. Speeds stay in km/h because the fuel
//! model's constants absorb the conversions. All types are immutable plain
//! data: construct, validate, share.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Breakpoint-continuity slack allowed between the power branch and the
/// clamped unity branch at a recorded critical gap.
pub const CONTINUITY_TOL: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Ldv,
    Bus,
    Hdt,
}

impl std::fmt::Display for VehicleClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VehicleClass::Ldv => write!(f, "ldv"),
            VehicleClass::Bus => write!(f, "bus"),
            VehicleClass::Hdt => write!(f, "hdt"),
        }
    }
}

/// One named rule violation found by a `validate()` call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: &str, rule: impl Into<String>) -> Self {
        Violation {
            field: field.to_string(),
            rule: rule.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Geometry, mass, drag baseline and fuel-map coefficients for one vehicle
/// type. `payload_kg` is kept separate from `mass_kg` and only added at
/// fuel-evaluation time via [`VehicleSpec::total_mass_kg`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpec {
    pub name: String,
    pub vehicle_class: VehicleClass,
    pub mass_kg: f64,
    pub length_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub frontal_area_m2: f64,
    /// Drag coefficient of the isolated vehicle.
    pub cd_infinity: f64,
    pub driveline_efficiency: f64,
    /// Fuel-map coefficients: idle rate, linear and quadratic power terms.
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    #[serde(default = "defaults::rolling_cr")]
    pub rolling_cr: f64,
    #[serde(default = "defaults::rolling_c1")]
    pub rolling_c1: f64,
    #[serde(default = "defaults::rolling_c2")]
    pub rolling_c2: f64,
    #[serde(default = "defaults::altitude_correction")]
    pub altitude_correction: f64,
    #[serde(default)]
    pub payload_kg: f64,
}

mod defaults {
    // Rolling-resistance defaults for radial tires on good asphalt, as used
    // by the power-based fuel model this crate implements. Fixture files
    // restate them explicitly so results remain auditable.
    pub fn rolling_cr() -> f64 {
        1.75
    }
    pub fn rolling_c1() -> f64 {
        0.0328
    }
    pub fn rolling_c2() -> f64 {
        4.575
    }
    pub fn altitude_correction() -> f64 {
        1.0
    }
}

impl VehicleSpec {
    /// Mass used in fuel computations: curb mass plus payload.
    pub fn total_mass_kg(&self) -> f64 {
        self.mass_kg + self.payload_kg
    }

    /// Same spec with a different payload.
    pub fn with_payload(mut self, payload_kg: f64) -> Self {
        self.payload_kg = payload_kg;
        self
    }

    /// Checks every invariant; returns an empty list iff the spec is valid.
    /// Total function: never fails, each violation names field and rule.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let positive = [
            ("mass_kg", self.mass_kg),
            ("length_m", self.length_m),
            ("width_m", self.width_m),
            ("height_m", self.height_m),
            ("frontal_area_m2", self.frontal_area_m2),
            ("cd_infinity", self.cd_infinity),
            ("altitude_correction", self.altitude_correction),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                v.push(Violation::new(name, "must be strictly positive"));
            }
        }
        if !(self.driveline_efficiency > 0.0 && self.driveline_efficiency <= 1.0) {
            v.push(Violation::new(
                "driveline_efficiency",
                "must lie in (0, 1]",
            ));
        }
        for (name, value) in [
            ("alpha0", self.alpha0),
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("rolling_cr", self.rolling_cr),
            ("rolling_c1", self.rolling_c1),
            ("rolling_c2", self.rolling_c2),
            ("payload_kg", self.payload_kg),
        ] {
            if !(value >= 0.0) {
                v.push(Violation::new(name, "must be non-negative"));
            }
        }
        if self.frontal_area_m2 > self.width_m * self.height_m {
            v.push(Violation::new(
                "frontal_area_m2",
                "cannot exceed width_m * height_m",
            ));
        }
        // With alpha2 = 0 the fuel map degenerates to a line; the inversion
        // then needs alpha1 > 0 to stay solvable.
        if self.alpha2 == 0.0 && self.alpha1 == 0.0 {
            v.push(Violation::new(
                "alpha1",
                "alpha1 and alpha2 cannot both be zero (fuel map not invertible)",
            ));
        }
        v
    }
}

/// Slot of a vehicle inside a platoon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Lead,
    Middle,
    Trail,
}

impl std::fmt::Display for Position {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Position::Lead => write!(f, "lead"),
            Position::Middle => write!(f, "middle"),
            Position::Trail => write!(f, "trail"),
        }
    }
}

/// Fitted drag-ratio power law for one (vehicle type, platoon size,
/// position) triple: `ratio(G) = a*G^b + c` below the critical gap, 1 above.
///
/// `g_o_m` may be absent, meaning the curve reaches 1 by its own root; the
/// drag module resolves the effective breakpoint by root search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_o_m: Option<f64>,
    pub position: Position,
    pub platoon_size: u32,
}

impl DragModel {
    /// Checks every invariant; empty list iff valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.a * self.b > 0.0) {
            v.push(Violation::new(
                "a",
                "a*b must be positive (ratio non-decreasing below the critical gap)",
            ));
        }
        if self.platoon_size < 2 {
            v.push(Violation::new("platoon_size", "must be at least 2"));
        }
        if let Some(g_o) = self.g_o_m {
            if !(g_o > 0.0) {
                v.push(Violation::new("g_o_m", "must be strictly positive"));
            } else {
                let dev = (self.a * g_o.powf(self.b) + self.c - 1.0).abs();
                if !(dev <= CONTINUITY_TOL) {
                    v.push(Violation::new(
                        "g_o_m",
                        format!(
                            "branch value at the critical gap deviates from 1 by {dev:.2e} (> {CONTINUITY_TOL:.0e})"
                        ),
                    ));
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKind {
    DragRatio,
    FuelRatio,
}

/// Ordered (gap, value) observations for one platoon slot.
///
/// Structural rules (point count, ordering, speed presence) are enforced at
/// construction; value-range rules are reported by [`MeasurementSeries::validate`]
/// so that synthetic series probing the model outside its physical range can
/// still be fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSeries {
    pub kind: MeasurementKind,
    /// (gap_m, value) pairs with strictly increasing gaps.
    pub points: Vec<(f64, f64)>,
    /// Free-form provenance tag.
    pub source: String,
    /// Test speed; required for fuel-ratio series (the inversion needs it).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speed_kmh: Option<f64>,
}

impl MeasurementSeries {
    pub fn new(
        kind: MeasurementKind,
        points: Vec<(f64, f64)>,
        source: impl Into<String>,
        speed_kmh: Option<f64>,
    ) -> Result<Self> {
        if points.len() < 4 {
            return Err(Error::invalid(format!(
                "a series needs at least 4 points, got {}",
                points.len()
            )));
        }
        let mut prev = 0.0;
        for (i, &(gap, value)) in points.iter().enumerate() {
            if !gap.is_finite() || !value.is_finite() {
                return Err(Error::invalid(format!("point {i} is not finite")));
            }
            if gap <= prev {
                return Err(Error::invalid(format!(
                    "gaps must be positive and strictly increasing (point {i}: {gap} after {prev})"
                )));
            }
            prev = gap;
        }
        if let Some(v) = speed_kmh {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!(
                    "series speed must be positive and finite, got {v}"
                )));
            }
        }
        if kind == MeasurementKind::FuelRatio && speed_kmh.is_none() {
            return Err(Error::invalid(
                "fuel-ratio series require a positive speed_kmh",
            ));
        }
        Ok(MeasurementSeries {
            kind,
            points,
            source: source.into(),
            speed_kmh,
        })
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.0)
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.1)
    }

    pub fn max_gap(&self) -> f64 {
        self.points.last().map(|p| p.0).unwrap_or(0.0)
    }

    /// Value-range checks: drag ratios in (0, 2), fuel ratios in (-1, 1).
    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        for (i, &(_, value)) in self.points.iter().enumerate() {
            let ok = match self.kind {
                MeasurementKind::DragRatio => value > 0.0 && value < 2.0,
                MeasurementKind::FuelRatio => value > -1.0 && value < 1.0,
            };
            if !ok {
                let range = match self.kind {
                    MeasurementKind::DragRatio => "(0, 2)",
                    MeasurementKind::FuelRatio => "(-1, 1)",
                };
                v.push(Violation::new(
                    "points",
                    format!("value {} at point {} outside {}", value, i, range),
                ));
            }
        }
        v
    }
}

/// Gap policy of a platoon: either a fixed distance or a time gap that is
/// converted at the platoon speed (`G = t * v / 3.6`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapSpec {
    DistanceM(f64),
    TimeS(f64),
}

/// A homogeneous platoon: one vehicle type, ordered slots, shared speed and
/// gap policy, and the position -> drag-model mapping used by the analysis
/// layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonConfig {
    pub vehicle: VehicleSpec,
    pub size: u32,
    pub speed_kmh: f64,
    pub gap: GapSpec,
    pub models: BTreeMap<Position, DragModel>,
}

impl PlatoonConfig {
    pub fn new(
        vehicle: VehicleSpec,
        size: u32,
        speed_kmh: f64,
        gap: GapSpec,
        models: BTreeMap<Position, DragModel>,
    ) -> Result<Self> {
        if size < 2 {
            return Err(Error::invalid("platoon size must be at least 2"));
        }
        if !(speed_kmh > 0.0) {
            return Err(Error::invalid("speed_kmh must be positive"));
        }
        match gap {
            GapSpec::DistanceM(g) if g > 0.0 => {}
            GapSpec::TimeS(t) if t > 0.0 => {}
            _ => return Err(Error::invalid("gap must be positive")),
        }
        let mut required = vec![Position::Lead, Position::Trail];
        if size >= 3 {
            required.push(Position::Middle);
        }
        for pos in required {
            if !models.contains_key(&pos) {
                return Err(Error::invalid(format!("missing drag model for {pos}")));
            }
        }
        Ok(PlatoonConfig {
            vehicle,
            size,
            speed_kmh,
            gap,
            models,
        })
    }

    /// Inter-vehicle distance gap in meters implied by the gap policy.
    pub fn gap_m(&self) -> f64 {
        match self.gap {
            GapSpec::DistanceM(g) => g,
            GapSpec::TimeS(t) => t * self.speed_kmh / 3.6,
        }
    }

    /// Drag model for the 1-based vehicle slot.
    ///
    /// Slot 1 is the lead, slot 2 the middle (in platoons of three or more),
    /// and every later slot reuses the third-vehicle (trail) model: vehicles
    /// deep in the slipstream behave like the third one.
    pub fn model_for_slot(&self, slot: u32) -> &DragModel {
        debug_assert!(slot >= 1 && slot <= self.size);
        let pos = if slot == 1 {
            Position::Lead
        } else if slot == 2 && self.size >= 3 {
            Position::Middle
        } else {
            Position::Trail
        };
        &self.models[&pos]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn hdt_geometry_spec() -> VehicleSpec {
        VehicleSpec {
            name: "hdt-geometry".into(),
            vehicle_class: VehicleClass::Hdt,
            mass_kg: 29400.0,
            length_m: 22.710,
            width_m: 2.489,
            height_m: 3.353,
            frontal_area_m2: 8.2,
            cd_infinity: 0.570,
            driveline_efficiency: 0.94,
            alpha0: 1.56e-3,
            alpha1: 8.10e-5,
            alpha2: 1.00e-8,
            rolling_cr: 1.75,
            rolling_c1: 0.0328,
            rolling_c2: 4.575,
            altitude_correction: 1.0,
            payload_kg: 0.0,
        }
    }

    #[test]
    fn valid_hdt_spec_has_no_violations() {
        // m = 29400, L = 22.710, A_f below 2.489 * 3.353
        assert_eq!(hdt_geometry_spec().validate(), Vec::new());
    }

    #[test]
    fn frontal_area_above_bounding_rectangle_is_flagged() {
        let mut spec = hdt_geometry_spec();
        spec.frontal_area_m2 = spec.width_m * spec.height_m + 1.0;
        let violations = spec.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].field, "frontal_area_m2");
    }

    #[test]
    fn degenerate_fuel_map_is_flagged() {
        let mut spec = hdt_geometry_spec();
        spec.alpha1 = 0.0;
        spec.alpha2 = 0.0;
        let violations = spec.validate();
        assert!(violations.iter().any(|v| v.field == "alpha1"));
    }

    #[test]
    fn drag_model_continuity_is_checked() {
        let good = DragModel {
            a: -1.7834,
            b: -0.0672,
            c: 2.3614,
            g_o_m: Some(55.72),
            position: Position::Trail,
            platoon_size: 2,
        };
        assert!(good.validate().is_empty());

        let discontinuous = DragModel {
            g_o_m: Some(20.0),
            ..good.clone()
        };
        assert!(discontinuous
            .validate()
            .iter()
            .any(|v| v.field == "g_o_m"));

        let wrong_family = DragModel {
            a: 0.5,
            b: -0.5,
            c: 0.5,
            g_o_m: None,
            position: Position::Lead,
            platoon_size: 2,
        };
        assert!(wrong_family.validate().iter().any(|v| v.field == "a"));
    }

    #[test]
    fn series_requires_increasing_gaps_and_enough_points() {
        let err = MeasurementSeries::new(
            MeasurementKind::DragRatio,
            vec![(1.0, 0.9), (2.0, 0.95), (3.0, 0.97)],
            "t",
            None,
        );
        assert!(err.is_err());

        let err = MeasurementSeries::new(
            MeasurementKind::DragRatio,
            vec![(1.0, 0.9), (1.0, 0.95), (3.0, 0.97), (4.0, 0.99)],
            "t",
            None,
        );
        assert!(err.is_err());

        let err = MeasurementSeries::new(
            MeasurementKind::FuelRatio,
            vec![(1.0, 0.1), (2.0, 0.08), (3.0, 0.05), (4.0, 0.02)],
            "t",
            None,
        );
        assert!(err.is_err(), "fuel series without speed must be rejected");
    }

    #[test]
    fn series_value_ranges_are_soft() {
        let s = MeasurementSeries::new(
            MeasurementKind::DragRatio,
            vec![(1.0, -0.5), (2.0, 0.5), (3.0, 0.9), (4.0, 0.99)],
            "t",
            None,
        )
        .unwrap();
        assert_eq!(s.validate().len(), 1);
    }

    #[test]
    fn platoon_config_requires_models_for_all_roles() {
        let spec = hdt_geometry_spec();
        let lead = DragModel {
            a: 0.7231,
            b: 0.0919,
            c: 0.0,
            g_o_m: Some(34.0181),
            position: Position::Lead,
            platoon_size: 2,
        };
        let trail = DragModel {
            a: 0.2241,
            b: 0.1369,
            c: 0.5016,
            g_o_m: Some(320.0),
            position: Position::Trail,
            platoon_size: 2,
        };
        let mut models = BTreeMap::new();
        models.insert(Position::Lead, lead);
        let err = PlatoonConfig::new(
            spec.clone(),
            2,
            100.0,
            GapSpec::DistanceM(10.0),
            models.clone(),
        );
        assert!(err.is_err());

        models.insert(Position::Trail, trail);
        let config =
            PlatoonConfig::new(spec, 2, 100.0, GapSpec::TimeS(0.5), models).unwrap();
        assert!((config.gap_m() - 13.88888888888889).abs() < 1e-12);
        assert_eq!(config.model_for_slot(1).position, Position::Lead);
        assert_eq!(config.model_for_slot(2).position, Position::Trail);
    }

    #[test]
    fn slot_models_follow_the_third_vehicle_rule() {
        let spec = hdt_geometry_spec();
        let mk = |position, c| DragModel {
            a: 0.1,
            b: 0.2,
            c,
            g_o_m: None,
            position,
            platoon_size: 5,
        };
        let mut models = BTreeMap::new();
        models.insert(Position::Lead, mk(Position::Lead, 0.9));
        models.insert(Position::Middle, mk(Position::Middle, 0.5));
        models.insert(Position::Trail, mk(Position::Trail, 0.4));
        let config =
            PlatoonConfig::new(spec, 5, 100.0, GapSpec::DistanceM(20.0), models).unwrap();
        let roles: Vec<Position> = (1..=5).map(|i| config.model_for_slot(i).position).collect();
        assert_eq!(
            roles,
            vec![
                Position::Lead,
                Position::Middle,
                Position::Trail,
                Position::Trail,
                Position::Trail
            ]
        );
    }
}
