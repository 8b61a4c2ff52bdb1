#![no_main]

use ceilmatch::pipeline::{format_benchmark, parse_benchmark};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(poses) = parse_benchmark(text) {
            let _ = parse_benchmark(&format_benchmark(&poses));
        }
    }
});
