#![no_main]

use ceilmatch::pipeline::{format_results, parse_results};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(outputs) = parse_results(text) {
            let _ = parse_results(&format_results(&outputs));
        }
    }
});
