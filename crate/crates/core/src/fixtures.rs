//! Bundled reference data: vehicle records, fitted drag-model rows, the
//! measurement series behind them, and the fit setups that tie the two
//! together. Everything is embedded so the library and CLI work without
//! external files.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::Result;
use crate::io;
use crate::types::{DragModel, MeasurementSeries, Position, VehicleClass, VehicleSpec};

const VEHICLES_TOML: &str = include_str!("../fixtures/vehicles.toml");
const MODELS_TOML: &str = include_str!("../fixtures/models.toml");
const FIT_SETUPS_TOML: &str = include_str!("../fixtures/fit_setups.toml");

/// (name, csv text) of every bundled measurement series.
pub const DATASETS: &[(&str, &str)] = &[
    ("ldv2_lead", include_str!("../fixtures/data/ldv2_lead.csv")),
    ("ldv2_trail", include_str!("../fixtures/data/ldv2_trail.csv")),
    ("ldv3_lead", include_str!("../fixtures/data/ldv3_lead.csv")),
    ("ldv3_middle", include_str!("../fixtures/data/ldv3_middle.csv")),
    ("ldv3_trail", include_str!("../fixtures/data/ldv3_trail.csv")),
    ("bus_lead", include_str!("../fixtures/data/bus_lead.csv")),
    ("bus2_trail", include_str!("../fixtures/data/bus2_trail.csv")),
    ("bus3_middle", include_str!("../fixtures/data/bus3_middle.csv")),
    ("bus3_trail", include_str!("../fixtures/data/bus3_trail.csv")),
    ("hdt2_lead_fuel", include_str!("../fixtures/data/hdt2_lead_fuel.csv")),
    ("hdt2_trail_fuel", include_str!("../fixtures/data/hdt2_trail_fuel.csv")),
    ("hdt3_lead_fuel", include_str!("../fixtures/data/hdt3_lead_fuel.csv")),
    ("hdt3_middle_fuel", include_str!("../fixtures/data/hdt3_middle_fuel.csv")),
    ("hdt3_trail_fuel", include_str!("../fixtures/data/hdt3_trail_fuel.csv")),
];

pub fn vehicles() -> Vec<VehicleSpec> {
    io::read_vehicle_specs(VEHICLES_TOML).expect("bundled vehicles parse")
}

pub fn vehicle(name: &str) -> Option<VehicleSpec> {
    vehicles().into_iter().find(|v| v.name == name)
}

/// One reference model row tagged with its vehicle class.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReferenceRow {
    pub vehicle_class: VehicleClass,
    pub platoon_size: u32,
    pub position: Position,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default)]
    pub g_o_m: Option<f64>,
}

impl ReferenceRow {
    pub fn model(&self) -> DragModel {
        DragModel {
            a: self.a,
            b: self.b,
            c: self.c,
            g_o_m: self.g_o_m,
            position: self.position,
            platoon_size: self.platoon_size,
        }
    }
}

#[derive(Debug, Deserialize)]
struct ModelFile {
    model: Vec<ReferenceRow>,
}

pub fn reference_rows() -> Vec<ReferenceRow> {
    toml::from_str::<ModelFile>(MODELS_TOML)
        .expect("bundled models parse")
        .model
}

pub fn reference_model(
    class: VehicleClass,
    platoon_size: u32,
    position: Position,
) -> Option<DragModel> {
    reference_rows()
        .into_iter()
        .find(|r| {
            r.vehicle_class == class && r.platoon_size == platoon_size && r.position == position
        })
        .map(|r| r.model())
}

/// The position -> model map for one class and platoon size, ready for a
/// [`crate::types::PlatoonConfig`].
pub fn models_for(class: VehicleClass, platoon_size: u32) -> BTreeMap<Position, DragModel> {
    reference_rows()
        .into_iter()
        .filter(|r| r.vehicle_class == class && r.platoon_size == platoon_size)
        .map(|r| (r.position, r.model()))
        .collect()
}

pub fn dataset(name: &str) -> Option<Result<MeasurementSeries>> {
    DATASETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| io::read_series_csv(text))
}

pub fn dataset_csv(name: &str) -> Option<&'static str> {
    DATASETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Configuration reproducing one reference row from its dataset.
#[derive(Debug, Clone, Deserialize)]
pub struct FitSetup {
    pub name: String,
    pub dataset: String,
    pub vehicle_class: VehicleClass,
    pub platoon_size: u32,
    pub position: Position,
    /// Vehicle record used to invert fuel-ratio datasets.
    #[serde(default)]
    pub invert_with: Option<String>,
    #[serde(default)]
    pub g_o_bounds: Option<(f64, f64)>,
    #[serde(default)]
    pub expect_active_bound: Option<String>,
    /// Allowed relative deviation of the fitted a, b, c from the reference.
    pub tol_abc_rel: f64,
    /// Allowed relative deviation of the fitted critical gap, when the
    /// reference records one.
    #[serde(default)]
    pub tol_g_o_rel: Option<f64>,
    pub expect: ReferenceExpect,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ReferenceExpect {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    #[serde(default)]
    pub g_o_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct SetupFile {
    setup: Vec<FitSetup>,
}

pub fn fit_setups() -> Vec<FitSetup> {
    toml::from_str::<SetupFile>(FIT_SETUPS_TOML)
        .expect("bundled fit setups parse")
        .setup
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_bundles_parse_and_are_valid() {
        let vehicles = vehicles();
        assert_eq!(vehicles.len(), 10);
        for v in &vehicles {
            assert!(v.validate().is_empty(), "{}: {:?}", v.name, v.validate());
        }

        let rows = reference_rows();
        assert_eq!(rows.len(), 15);
        for r in &rows {
            let model = r.model();
            assert!(
                model.validate().is_empty(),
                "{:?} {} {}: {:?}",
                r.vehicle_class,
                r.platoon_size,
                r.position,
                model.validate()
            );
        }

        for (name, _) in DATASETS {
            let series = dataset(name).unwrap().unwrap();
            assert!(series.points.len() >= 4, "{name}");
            assert!(series.validate().is_empty(), "{name}: {:?}", series.validate());
        }

        let setups = fit_setups();
        assert_eq!(setups.len(), 15);
        for s in &setups {
            assert!(dataset(&s.dataset).is_some(), "{}", s.dataset);
            if let Some(v) = &s.invert_with {
                assert!(vehicle(v).is_some(), "{v}");
            }
        }
    }

    #[test]
    fn class_maps_cover_the_platoon_roles() {
        for class in [VehicleClass::Ldv, VehicleClass::Bus, VehicleClass::Hdt] {
            let two = models_for(class, 2);
            assert!(two.contains_key(&Position::Lead) && two.contains_key(&Position::Trail));
            let three = models_for(class, 3);
            assert_eq!(three.len(), 3);
        }
    }
}
