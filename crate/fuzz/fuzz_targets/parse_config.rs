#![no_main]

use libfuzzer_sys::fuzz_target;
use lratm::io::{format_config, parse_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_config(text) {
        // compare text, NaN parameters make the structs unequal
        let once = format_config(&cfg);
        assert_eq!(format_config(&parse_config(&once).unwrap()), once);
    }
});
