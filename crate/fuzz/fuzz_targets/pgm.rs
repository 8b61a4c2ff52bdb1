#![no_main]

use ceilmatch::image::{encode_pgm, parse_pgm};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = parse_pgm(data) {
        let again = parse_pgm(&encode_pgm(&img)).expect("encoded image must decode");
        assert_eq!(again, img);
    }
});
