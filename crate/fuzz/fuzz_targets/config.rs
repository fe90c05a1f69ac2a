#![no_main]

use fct_core::io::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(map) = parse_config(data) {
        for k in map.keys() {
            assert!(!k.is_empty());
        }
    }
});
