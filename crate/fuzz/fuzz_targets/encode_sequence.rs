#![no_main]

use libfuzzer_sys::fuzz_target;
use mcdf_core::vocab::{default_vocabulary, EncodeMode};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let vocab = default_vocabulary();
    if let Ok(tokens) = vocab.encode(text, EncodeMode::Strict) {
        assert_eq!(vocab.decode(&tokens).unwrap(), text.to_ascii_uppercase());
    }
    if let Ok(tokens) = vocab.encode(text, EncodeMode::Lenient) {
        assert_eq!(tokens.len(), text.chars().count());
    }
});
