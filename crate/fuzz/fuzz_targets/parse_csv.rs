#![no_main]

use libfuzzer_sys::fuzz_target;
use soilvwc::dataset::{parse_csv, write_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ds) = parse_csv(text, "fuzz") {
        // canonical output must parse back to the same records
        let again = parse_csv(&write_csv(&ds), "fuzz").expect("canonical CSV rejected");
        assert_eq!(again.len(), ds.len());
        assert_eq!(again.timestamps(), ds.timestamps());
    }
});
