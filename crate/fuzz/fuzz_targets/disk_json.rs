#![no_main]

use fct_core::io::{disk_to_json, parse_disk_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(d) = parse_disk_json(s) {
        let u = vec![0.25; d.dim()];
        let _ = d.chart_norm(&d.chart(&u));
        let _ = parse_disk_json(&disk_to_json(&d));
    }
});
