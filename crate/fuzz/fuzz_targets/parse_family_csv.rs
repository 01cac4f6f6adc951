#![no_main]

use libfuzzer_sys::fuzz_target;
use mcdf_core::dataset::{parse_family_csv, LoadOptions};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    for lenient in [false, true] {
        let options = LoadOptions { lenient };
        let _ = parse_family_csv(text, "fuzz", None, options);
        let _ = parse_family_csv(text, "fuzz", Some("MKTAYIAKQRQISFVKSHFSRQ"), options);
    }
});
