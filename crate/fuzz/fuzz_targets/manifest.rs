#![no_main]

use ceilmatch::refdb::{format_manifest, parse_manifest};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = parse_manifest(text) {
            let _ = parse_manifest(&format_manifest(&m));
        }
    }
});
