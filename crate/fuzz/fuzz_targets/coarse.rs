#![no_main]

use ceilmatch::refdb::{parse_coarse, parse_confusion_matrix, parse_match_list};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_coarse(text);
        let _ = parse_confusion_matrix(text);
        let _ = parse_match_list(text);
    }
});
