//! Fuzz the vehicle-record reader: arbitrary TOML must parse or error
//! cleanly, and validation must be total on whatever parses.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if data.len() > 1 << 20 {
        return;
    }
    if let Ok(specs) = platoon_core::io::read_vehicle_specs(data) {
        for spec in &specs {
            // Validation never panics, whatever the field values.
            let _ = spec.validate();
        }
        // Finite records survive a write/read cycle.
        for spec in specs {
            let finite = [
                spec.mass_kg,
                spec.length_m,
                spec.width_m,
                spec.height_m,
                spec.frontal_area_m2,
                spec.cd_infinity,
                spec.driveline_efficiency,
                spec.alpha0,
                spec.alpha1,
                spec.alpha2,
                spec.rolling_cr,
                spec.rolling_c1,
                spec.rolling_c2,
                spec.altitude_correction,
                spec.payload_kg,
            ]
            .iter()
            .all(|v| v.is_finite());
            if finite {
                let text = platoon_core::io::write_vehicle_spec(&spec);
                let back = platoon_core::io::read_vehicle_specs(&text)
                    .expect("a written record always re-parses");
                assert_eq!(back, vec![spec]);
            }
        }
    }
});
