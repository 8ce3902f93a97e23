#![no_main]

use libfuzzer_sys::fuzz_target;
use soilvwc::simulator::{parse_rain_record, parse_truth, write_truth};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(t) = parse_truth(text) {
        let again = parse_truth(&write_truth(&t)).expect("written truth rejected");
        assert_eq!(again.rains, t.rains);
    }
    if let Ok(rains) = parse_rain_record(text) {
        for r in rains {
            assert!(r.end > r.start);
        }
    }
});
