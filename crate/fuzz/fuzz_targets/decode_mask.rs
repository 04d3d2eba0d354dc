#![no_main]

use libfuzzer_sys::fuzz_target;
use lratm::io::{decode_mask, encode_mask};

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = decode_mask(data) {
        assert_eq!(encode_mask(&m), data);
    }
});
