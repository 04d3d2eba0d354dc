#![no_main]

use libfuzzer_sys::fuzz_target;
use lratm::io::parse_index_list;

// First byte picks the number of modes, the next ones their extents.
fuzz_target!(|data: &[u8]| {
    let Some((&ndim, rest)) = data.split_first() else { return };
    let ndim = (ndim % 4) as usize + 1;
    if rest.len() < ndim {
        return;
    }
    let (dims, text) = rest.split_at(ndim);
    let shape: Vec<usize> = dims.iter().map(|&d| (d % 16) as usize + 1).collect();
    if let Ok(text) = std::str::from_utf8(text) {
        let _ = parse_index_list(text, &shape);
    }
});
