#![no_main]

use ceilmatch::pipeline::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            let _ = cfg.validate();
            let _ = parse_config(&cfg.to_text());
        }
    }
});
