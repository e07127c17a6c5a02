//! Power-based instantaneous fuel model.
//!
//! Resistance and power keep speed in km/h exactly as the model is usually
//! written; the 25.92 and 3600 constants absorb the unit conversions, so no
//! internal SI normalization happens anywhere. Fuel is liters per second.

use serde::{Deserialize, Serialize};

use crate::types::{VehicleSpec, Violation};

/// Rotational-inertia mass factor of the acceleration term.
const MASS_FACTOR: f64 = 1.04;

/// Instantaneous kinematic state of a vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivingState {
    pub speed_kmh: f64,
    pub accel_ms2: f64,
    /// Roadway grade as a dimensionless fraction.
    pub grade: f64,
}

impl DrivingState {
    /// Steady cruise: zero acceleration on a flat road.
    pub fn steady(speed_kmh: f64) -> Self {
        DrivingState {
            speed_kmh,
            accel_ms2: 0.0,
            grade: 0.0,
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.speed_kmh >= 0.0) {
            v.push(Violation {
                field: "speed_kmh".into(),
                rule: "must be non-negative".into(),
            });
        }
        if !(self.grade.abs() < 0.2) {
            v.push(Violation {
                field: "grade".into(),
                rule: "|grade| must be below 0.2".into(),
            });
        }
        v
    }
}

/// Ambient constants. Defaults are sea-level air density at 15 C and
/// standard gravity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    #[serde(default = "Environment::default_air_density")]
    pub air_density_kgm3: f64,
    #[serde(default = "Environment::default_gravity")]
    pub gravity_ms2: f64,
}

impl Environment {
    fn default_air_density() -> f64 {
        1.2256
    }
    fn default_gravity() -> f64 {
        9.8066
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if !(self.air_density_kgm3 > 0.8 && self.air_density_kgm3 < 1.5) {
            v.push(Violation {
                field: "air_density_kgm3".into(),
                rule: "must lie in (0.8, 1.5)".into(),
            });
        }
        v
    }
}

impl Default for Environment {
    fn default() -> Self {
        Environment {
            air_density_kgm3: Self::default_air_density(),
            gravity_ms2: Self::default_gravity(),
        }
    }
}

/// Resistance force in newtons at the given drag coefficient and state:
/// aerodynamic + rolling + grade terms, with speed in km/h and the total
/// (curb + payload) mass.
pub fn resistance(spec: &VehicleSpec, cd: f64, state: &DrivingState, env: &Environment) -> f64 {
    aero_resistance(spec, cd, state, env) + nonaero_resistance(spec, state, env)
}

/// Aerodynamic portion only: `rho/25.92 * cd * C_h * A_f * v^2`.
pub(crate) fn aero_resistance(
    spec: &VehicleSpec,
    cd: f64,
    state: &DrivingState,
    env: &Environment,
) -> f64 {
    env.air_density_kgm3 / 25.92
        * cd
        * spec.altitude_correction
        * spec.frontal_area_m2
        * state.speed_kmh
        * state.speed_kmh
}

/// Rolling plus grade portion, independent of the drag coefficient.
pub(crate) fn nonaero_resistance(
    spec: &VehicleSpec,
    state: &DrivingState,
    env: &Environment,
) -> f64 {
    let m = spec.total_mass_kg();
    let g = env.gravity_ms2;
    g * m * (spec.rolling_cr / 1000.0) * (spec.rolling_c1 * state.speed_kmh + spec.rolling_c2)
        + g * m * state.grade
}

/// Instantaneous power at the wheels divided by the driveline efficiency,
/// in kW: `(R + 1.04*m*a) / (3600*eta) * v`.
pub fn power_kw(spec: &VehicleSpec, cd: f64, state: &DrivingState, env: &Environment) -> f64 {
    let r = resistance(spec, cd, state, env);
    (r + MASS_FACTOR * spec.total_mass_kg() * state.accel_ms2)
        / (3600.0 * spec.driveline_efficiency)
        * state.speed_kmh
}

/// Fuel rate in L/s from the quadratic fuel-power map; the idle rate applies
/// whenever power is negative.
pub fn fuel_rate(spec: &VehicleSpec, power_kw: f64) -> f64 {
    if power_kw < 0.0 {
        spec.alpha0
    } else {
        spec.alpha0 + spec.alpha1 * power_kw + spec.alpha2 * power_kw * power_kw
    }
}
