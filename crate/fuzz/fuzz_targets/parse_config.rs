#![no_main]

use libfuzzer_sys::fuzz_target;
use soilvwc::cli::{load_config, parse_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pairs) = parse_config(text) {
        for (line, key, _) in &pairs {
            assert!(*line >= 1);
            assert!(!key.is_empty());
        }
    }
    let _ = load_config(Some(text), &[], None);
});
