//! Fuzz the measurement-CSV reader: malformed input must come back as a
//! parse error, never a panic, and anything that parses must survive a
//! write/read cycle.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if data.len() > 1 << 20 {
        return;
    }
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(series) = platoon_core::io::read_series_csv(text) {
        let rewritten = platoon_core::io::write_series_csv(&series);
        let back = platoon_core::io::read_series_csv(&rewritten)
            .expect("a written series always re-parses");
        assert_eq!(series, back);
    }
});
