#![no_main]

use libfuzzer_sys::fuzz_target;

use opspam_core::features::{parse_matrix_dump, write_matrix_dump};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(matrix) = parse_matrix_dump(text) else { return };
    // One rewrite reaches the canonical form and stays there.
    let canonical = write_matrix_dump(&matrix);
    let reparsed = parse_matrix_dump(&canonical).unwrap();
    assert_eq!(reparsed.rows(), matrix.rows());
    assert_eq!(reparsed.cols(), matrix.cols());
    assert_eq!(write_matrix_dump(&reparsed), canonical);
});
