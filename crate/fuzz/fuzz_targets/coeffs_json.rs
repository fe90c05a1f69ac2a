#![no_main]

use fct_core::io::{coeffs_to_json, parse_coeffs_json};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(f) = parse_coeffs_json(s) {
        // anything accepted must survive a round trip
        let back = parse_coeffs_json(&coeffs_to_json(&f)).expect("re-parse");
        assert_eq!(back.coeffs(), f.coeffs());
        let _ = f.eval(0.5);
    }
});
