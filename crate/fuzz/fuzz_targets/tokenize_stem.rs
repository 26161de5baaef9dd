#![no_main]

use libfuzzer_sys::fuzz_target;

use opspam_core::corpus::{porter, tokenize};

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    for token in tokenize(&text) {
        assert!(!token.is_empty());
        let stem = porter::stem(&token);
        assert!(!stem.is_empty());
        assert!(stem.chars().count() <= token.chars().count());
    }
});
