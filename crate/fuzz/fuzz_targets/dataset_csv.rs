#![no_main]
use libfuzzer_sys::fuzz_target;

use maxlin::io::{dataset_to_csv, parse_dataset_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Parsing must never panic; accepted inputs must round-trip exactly.
    if let Ok(dataset) = parse_dataset_csv(text) {
        let rewritten = dataset_to_csv(&dataset);
        let reparsed = parse_dataset_csv(&rewritten).expect("round trip must parse");
        assert_eq!(reparsed, dataset);
    }
});
