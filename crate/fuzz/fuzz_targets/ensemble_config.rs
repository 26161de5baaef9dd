#![no_main]

use libfuzzer_sys::fuzz_target;

use opspam_core::ensemble::{parse_ensemble_config, write_ensemble_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(members) = parse_ensemble_config(text) else { return };
    let rewritten = write_ensemble_config(&members);
    assert_eq!(parse_ensemble_config(&rewritten).unwrap(), members);
});
