//! Piecewise drag-ratio evaluation and critical-gap resolution.
//!
//! Below the critical gap the ratio follows the power branch `a*G^b + c`
//! (capped at 1 to preserve the physical ceiling against fit noise); at and
//! beyond it the ratio is exactly 1.

use crate::error::{Error, Result};
use crate::types::{DragModel, VehicleSpec};

/// Bracket and tolerance of the public breakpoint search.
const BRACKET_LO: f64 = 1e-3;
const BRACKET_HI: f64 = 1e3;
const ROOT_TOL_M: f64 = 1e-6;

/// Closed-form root of `a*G^b + c = 1`, i.e. `((1-c)/a)^(1/b)`.
///
/// Returns `None` when the branch never reaches 1 (no sign change) or the
/// exponent degenerates. Used internally where the search bracket of
/// [`effective_breakpoint`] would be too narrow (fits can land far outside).
pub(crate) fn unity_root(a: f64, b: f64, c: f64) -> Option<f64> {
    if a == 0.0 || b == 0.0 {
        return None;
    }
    let x = (1.0 - c) / a;
    if x <= 0.0 {
        return None;
    }
    let root = x.powf(1.0 / b);
    (root.is_finite() && root > 0.0).then_some(root)
}

/// Critical gap of a model: the recorded value when present, otherwise the
/// root of `a*G^b + c = 1` found by bisection on [1e-3, 1e3] m to 1e-6 m.
pub fn effective_breakpoint(model: &DragModel) -> Result<f64> {
    if let Some(g_o) = model.g_o_m {
        return Ok(g_o);
    }
    let f = |g: f64| model.a * g.powf(model.b) + model.c - 1.0;
    let (mut lo, mut hi) = (BRACKET_LO, BRACKET_HI);
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo * fhi < 0.0) {
        return Err(Error::NoBreakpoint {
            lo: BRACKET_LO,
            hi: BRACKET_HI,
        });
    }
    while hi - lo > ROOT_TOL_M {
        let mid = 0.5 * (lo + hi);
        if f(lo) * f(mid) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Drag-coefficient ratio `C_D / C_D_inf` at a distance gap.
///
/// Exactly 1 at and beyond the critical gap; `min(a*G^b + c, 1)` below it.
/// The critical gap is resolved exactly like [`effective_breakpoint`], so a
/// gap at or past that value always maps to 1.
pub fn drag_ratio(model: &DragModel, gap_m: f64) -> Result<f64> {
    if !(gap_m > 0.0) {
        return Err(Error::domain(format!(
            "distance gap must be positive, got {gap_m}"
        )));
    }
    let bp = effective_breakpoint(model)?;
    if gap_m >= bp {
        return Ok(1.0);
    }
    Ok((model.a * gap_m.powf(model.b) + model.c).min(1.0))
}

/// Absolute drag coefficient: `cd_infinity * drag_ratio`.
pub fn drag_coefficient(spec: &VehicleSpec, model: &DragModel, gap_m: f64) -> Result<f64> {
    Ok(spec.cd_infinity * drag_ratio(model, gap_m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{Position, VehicleClass};
    use proptest::prelude::*;

    fn model(a: f64, b: f64, c: f64, g_o_m: Option<f64>) -> DragModel {
        DragModel {
            a,
            b,
            c,
            g_o_m,
            position: Position::Trail,
            platoon_size: 2,
        }
    }

    fn ldv2_trail() -> DragModel {
        model(-1.7834, -0.0672, 2.3614, Some(55.72))
    }

    #[test]
    fn recorded_breakpoint_is_passed_through() {
        assert_eq!(effective_breakpoint(&ldv2_trail()).unwrap(), 55.72);
    }

    #[test]
    fn bisection_matches_the_closed_form_root() {
        // Two-vehicle lead curve; closed form ((1-c)/a)^(1/b) = 7.9103...
        let m = model(-0.7575, -1.5225, 1.0325, None);
        let bp = effective_breakpoint(&m).unwrap();
        let oracle = ((1.0 - m.c) / m.a).powf(1.0 / m.b);
        assert!((oracle - 7.910306016613338).abs() < 1e-9);
        assert!((bp - oracle).abs() <= 1e-6, "bp {bp} vs oracle {oracle}");
    }

    #[test]
    fn asymptotic_curve_has_no_breakpoint() {
        // c = 1 with a < 0: the branch approaches 1 from below but never
        // reaches it.
        let m = model(-0.5, -0.3, 1.0, None);
        assert!(matches!(
            effective_breakpoint(&m),
            Err(Error::NoBreakpoint { .. })
        ));
        assert!(matches!(drag_ratio(&m, 5.0), Err(Error::NoBreakpoint { .. })));
    }

    #[test]
    fn ratio_is_continuous_at_the_recorded_breakpoint() {
        let m = ldv2_trail();
        let below = drag_ratio(&m, 55.72 - 1e-9).unwrap();
        let at = drag_ratio(&m, 55.72).unwrap();
        assert_eq!(at, 1.0);
        assert!((below - 1.0).abs() <= 5e-3);

        let hdt_lead = DragModel {
            a: 0.7231,
            b: 0.0919,
            c: 0.0,
            g_o_m: Some(34.0181),
            position: Position::Lead,
            platoon_size: 2,
        };
        let below = drag_ratio(&hdt_lead, 34.0181 - 1e-9).unwrap();
        assert!((below - 1.0).abs() <= 5e-3);
        assert_eq!(drag_ratio(&hdt_lead, 34.0181).unwrap(), 1.0);
    }

    #[test]
    fn ratio_clamps_to_one_far_beyond_the_breakpoint() {
        let m = ldv2_trail();
        assert_eq!(drag_ratio(&m, 557.2).unwrap(), 1.0);
    }

    #[test]
    fn trail_ratio_at_ten_meters() {
        let r = drag_ratio(&ldv2_trail(), 10.0).unwrap();
        assert!((r - 0.8336624179956753).abs() < 1e-12);
        assert!((r - 0.834).abs() < 1e-3);
    }

    #[test]
    fn non_positive_gap_is_a_domain_error() {
        assert!(matches!(drag_ratio(&ldv2_trail(), 0.0), Err(Error::Domain(_))));
        assert!(matches!(drag_ratio(&ldv2_trail(), -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn branch_values_above_one_are_capped() {
        // Increasing branch that crosses 1 before the recorded gap.
        let m = model(0.5, 0.5, 0.5, Some(9.0));
        // At G = 4 the branch is 1.5; capped to the physical ceiling.
        assert_eq!(drag_ratio(&m, 4.0).unwrap(), 1.0);
        assert!(drag_ratio(&m, 0.5).unwrap() < 1.0);
    }

    #[test]
    fn coefficient_scales_the_ratio() {
        let spec = VehicleSpec {
            name: "ldv".into(),
            vehicle_class: VehicleClass::Ldv,
            mass_kg: 1700.0,
            length_m: 4.952,
            width_m: 1.877,
            height_m: 1.663,
            frontal_area_m2: 2.3,
            cd_infinity: 0.367,
            driveline_efficiency: 0.8,
            alpha0: 6e-4,
            alpha1: 1.9e-5,
            alpha2: 1e-6,
            rolling_cr: 1.75,
            rolling_c1: 0.0328,
            rolling_c2: 4.575,
            altitude_correction: 1.0,
            payload_kg: 0.0,
        };
        // Clamped region: ratio 1 -> the isolated coefficient.
        let cd = drag_coefficient(&spec, &ldv2_trail(), 100.0).unwrap();
        assert_eq!(cd, 0.367);

        // Plain multiplication below the breakpoint.
        let m = model(0.5, 0.5, 0.25, Some(100.0));
        let spec2 = VehicleSpec {
            cd_infinity: 0.65,
            ..spec
        };
        let g = 0.25; // branch = 0.5*0.5 + 0.25 = 0.5
        let cd = drag_coefficient(&spec2, &m, g).unwrap();
        assert!((cd - 0.325).abs() < 1e-12);
    }

    #[test]
    fn hdt_lead_coefficient_near_breakpoint() {
        let spec_cd = 0.570;
        let hdt_lead = DragModel {
            a: 0.7231,
            b: 0.0919,
            c: 0.0,
            g_o_m: Some(34.0181),
            position: Position::Lead,
            platoon_size: 2,
        };
        let r = drag_ratio(&hdt_lead, 34.0181 - 1e-6).unwrap();
        assert!((spec_cd * r - 0.570).abs() < 5e-3 * 0.570 + 1e-9);
    }

    proptest! {
        // Clamping: every gap at or beyond the breakpoint maps to exactly 1.
        #[test]
        fn clamped_region_is_exactly_one(mult in 1.0f64..50.0) {
            let m = ldv2_trail();
            let bp = effective_breakpoint(&m).unwrap();
            prop_assert_eq!(drag_ratio(&m, bp * mult).unwrap(), 1.0);
        }

        // Monotone non-decreasing below the breakpoint for a*b > 0 curves.
        #[test]
        fn power_branch_is_monotone(g1 in 0.1f64..55.0, g2 in 0.1f64..55.0) {
            let m = ldv2_trail();
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let r_lo = drag_ratio(&m, lo).unwrap();
            let r_hi = drag_ratio(&m, hi).unwrap();
            prop_assert!(r_lo <= r_hi + 1e-12);
        }
    }
}
