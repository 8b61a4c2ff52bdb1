#![no_main]

use ceilmatch::heatmap::{encode_luhm, parse_luhm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(map) = parse_luhm(data) {
        // re-encoding an accepted map is a fixed point
        let bytes = encode_luhm(&map);
        let again = parse_luhm(&bytes).expect("encoded map must decode");
        assert_eq!(encode_luhm(&again), bytes);
    }
});
