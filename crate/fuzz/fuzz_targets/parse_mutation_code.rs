#![no_main]

use libfuzzer_sys::fuzz_target;
use mcdf_core::mutation::{format_mutations, parse_mutation_code};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(muts) = parse_mutation_code(text) {
        let canonical = format_mutations(&muts);
        assert_eq!(parse_mutation_code(&canonical).unwrap(), muts);
    }
});
