#![no_main]

use libfuzzer_sys::fuzz_target;

use opspam_core::persist::{
    load_ensemble, load_lsi, load_pipeline, peek_kind, save_ensemble, save_lsi, save_pipeline,
};

fuzz_target!(|data: &[u8]| {
    let _ = peek_kind(data);
    if let Ok(model) = load_lsi(data) {
        // Accepted latent models are stored in exactly one byte encoding.
        assert_eq!(save_lsi(&model), data);
    }
    if let Ok(pipeline) = load_pipeline(data) {
        // The embedded config TOML admits formatting freedom, so one save
        // canonicalizes; after that the bytes are stable.
        let canonical = save_pipeline(&pipeline);
        let reloaded = load_pipeline(&canonical).unwrap();
        assert_eq!(save_pipeline(&reloaded), canonical);
    }
    if let Ok(ensemble) = load_ensemble(data) {
        let canonical = save_ensemble(&ensemble);
        let reloaded = load_ensemble(&canonical).unwrap();
        assert_eq!(save_ensemble(&reloaded), canonical);
    }
});
