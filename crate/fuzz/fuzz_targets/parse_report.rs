#![no_main]

use libfuzzer_sys::fuzz_target;
use soilvwc::cli::parse_eval_report;
use soilvwc::cli::report::{parse_block, write_block};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(entries) = parse_block(text) {
        let again = parse_block(&write_block(&entries)).expect("written block rejected");
        assert_eq!(again, entries);
    }
    let _ = parse_eval_report(text);
});
