#![no_main]

use libfuzzer_sys::fuzz_target;
use soilvwc::cli::parse_suite;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(rows) = parse_suite(text) {
        assert!(!rows.is_empty());
        for r in rows {
            assert!(!r.features.is_empty());
            let _ = r.label();
        }
    }
});
