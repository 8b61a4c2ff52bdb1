#![no_main]

use ceilmatch::labeler::{format_labels, parse_labels};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(frames) = parse_labels(text) {
            let _ = parse_labels(&format_labels(&frames));
        }
    }
});
