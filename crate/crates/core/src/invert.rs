//! Fuel-to-drag inversion: turns fuel-reduction measurements into the
//! equivalent drag-coefficient ratios so they can be fitted like direct
//! drag data.
//!
//! The chain is fuel ratio -> absolute fuel -> power (quadratic root) ->
//! drag coefficient. Only the non-aerodynamic resistance is subtracted in
//! the last step, which makes the whole chain an exact inverse of the
//! forward fuel model (see `cd_from_power`).

use crate::error::{Error, Result};
use crate::fuel::{self, DrivingState, Environment};
use crate::types::{MeasurementKind, MeasurementSeries, VehicleSpec};

/// Absolute fuel rate implied by a fuel-reduction ratio `delta`:
/// `F = F_inf * (1 - delta)` with `F_inf` evaluated at the isolated-vehicle
/// drag coefficient under the given steady state.
pub fn fuel_from_ratio(
    delta: f64,
    spec: &VehicleSpec,
    state: &DrivingState,
    env: &Environment,
) -> Result<f64> {
    if !(delta < 1.0) {
        return Err(Error::domain(format!(
            "fuel ratio {delta} implies non-positive fuel"
        )));
    }
    let p_inf = fuel::power_kw(spec, spec.cd_infinity, state, env);
    Ok(fuel::fuel_rate(spec, p_inf) * (1.0 - delta))
}

/// Non-negative power solving `n*(alpha0 + alpha1*P + alpha2*P^2) = fuel`.
///
/// Falls back to the linear solution when `alpha2 = 0`. Fuel below the idle
/// rate has no non-negative root and is reported as such.
pub fn power_from_fuel(spec: &VehicleSpec, fuel: f64, n: f64) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::domain(format!("scale n must be positive, got {n}")));
    }
    let idle = n * spec.alpha0;
    if fuel < idle {
        return Err(Error::NoPositiveRoot { fuel, idle });
    }
    if spec.alpha2 == 0.0 {
        if spec.alpha1 == 0.0 {
            return Err(Error::domain(
                "alpha1 and alpha2 are both zero; fuel map is constant",
            ));
        }
        return Ok((fuel - idle) / (n * spec.alpha1));
    }
    let (a1, a2) = (n * spec.alpha1, n * spec.alpha2);
    let disc = a1 * a1 - 4.0 * a2 * (idle - fuel);
    if disc < 0.0 {
        return Err(Error::NoPositiveRoot { fuel, idle });
    }
    Ok((-a1 + disc.sqrt()) / (2.0 * a2))
}

/// Drag coefficient consistent with a given power demand:
/// `(P*3600*eta/v - R_nonaero) / (rho/25.92 * A_f * C_h * v^2)`.
///
/// `R_nonaero` is the rolling + grade resistance only. Subtracting the full
/// isolated-vehicle resistance would shift the result by `cd_infinity`; the
/// aerodynamic share is exactly what the numerator must retain for the
/// drag -> fuel -> drag round trip to be the identity.
pub fn cd_from_power(
    spec: &VehicleSpec,
    power_kw: f64,
    state: &DrivingState,
    env: &Environment,
) -> Result<f64> {
    let v = state.speed_kmh;
    if !(v > 0.0) {
        return Err(Error::domain("speed must be positive for drag inversion"));
    }
    let r_total = power_kw * 3600.0 * spec.driveline_efficiency / v
        - 1.04 * spec.total_mass_kg() * state.accel_ms2;
    let r_aero = r_total - fuel::nonaero_resistance(spec, state, env);
    let denom = env.air_density_kgm3 / 25.92
        * spec.frontal_area_m2
        * spec.altitude_correction
        * v
        * v;
    Ok(r_aero / denom)
}

/// Pointwise conversion of a fuel-ratio series into a drag-ratio series.
///
/// Gaps are preserved; each value is pushed through the fuel -> power ->
/// drag chain at the series speed and divided by `cd_infinity`. The scale
/// parameter `n` multiplies the absolute fuel on both sides of the chain,
/// so the resulting ratios are invariant to it. Pointwise failures carry
/// the offending point index.
pub fn series_fuel_to_drag(
    series: &MeasurementSeries,
    spec: &VehicleSpec,
    env: &Environment,
    n: f64,
) -> Result<MeasurementSeries> {
    if series.kind != MeasurementKind::FuelRatio {
        return Err(Error::invalid("series is not fuel-ratio data"));
    }
    let speed = series
        .speed_kmh
        .ok_or_else(|| Error::invalid("fuel-ratio series is missing its speed"))?;
    let state = DrivingState::steady(speed);
    let mut points = Vec::with_capacity(series.points.len());
    for (i, &(gap, delta)) in series.points.iter().enumerate() {
        let ratio = (|| -> Result<f64> {
            let f = n * fuel_from_ratio(delta, spec, &state, env)?;
            let p = power_from_fuel(spec, f, n)?;
            Ok(cd_from_power(spec, p, &state, env)? / spec.cd_infinity)
        })()
        .map_err(|e| Error::at_point(i, e))?;
        points.push((gap, ratio));
    }
    MeasurementSeries::new(
        MeasurementKind::DragRatio,
        points,
        format!("{} (converted from fuel ratios)", series.source),
        Some(speed),
    )
}
