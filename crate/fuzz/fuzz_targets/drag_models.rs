//! Fuzz the drag-model reader, then drive the evaluator with whatever
//! parses: ratio evaluation and breakpoint search must never panic.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if data.len() > 1 << 20 {
        return;
    }
    if let Ok(models) = platoon_core::io::read_drag_models(data) {
        for model in models {
            let _ = model.validate();
            let _ = platoon_core::drag::effective_breakpoint(&model);
            for gap in [-1.0, 0.0, 1e-3, 1.0, 55.72, 1e4] {
                if let Ok(ratio) = platoon_core::drag::drag_ratio(&model, gap) {
                    assert!(ratio <= 1.0, "ratio above the physical ceiling");
                }
            }
        }
    }
});
