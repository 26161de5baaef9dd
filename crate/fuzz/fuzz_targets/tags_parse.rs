#![no_main]

use libfuzzer_sys::fuzz_target;

use opspam_core::features::parse_tags;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(pairs) = parse_tags(text) else { return };
    // Accepted sidecars round-trip through the canonical line format.
    // Carriage returns survive parsing mid-field but are stripped at line
    // ends, so fields containing them have no canonical form.
    if pairs.iter().any(|(t, g)| t.contains('\r') || g.contains('\r')) {
        return;
    }
    let mut rewritten = String::new();
    for (token, tag) in &pairs {
        rewritten.push_str(token);
        rewritten.push('\t');
        rewritten.push_str(tag);
        rewritten.push('\n');
    }
    assert_eq!(parse_tags(&rewritten).unwrap(), pairs);
});
