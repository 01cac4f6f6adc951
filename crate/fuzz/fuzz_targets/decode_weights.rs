#![no_main]

use libfuzzer_sys::fuzz_target;
use mcdf_core::model::{decode_weights, encode_weights};

fuzz_target!(|data: &[u8]| {
    if let Ok(params) = decode_weights(data) {
        let bytes = encode_weights(&params);
        let again = decode_weights(&bytes).expect("re-encoded weights decode");
        assert_eq!(encode_weights(&again), bytes);
    }
});
