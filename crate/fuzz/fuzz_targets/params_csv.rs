#![no_main]
use libfuzzer_sys::fuzz_target;

use maxlin::io::{param_blocks_to_csv, parse_param_blocks_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(beta) = parse_param_blocks_csv(text) {
        let rewritten = param_blocks_to_csv(&beta);
        let reparsed = parse_param_blocks_csv(&rewritten).expect("round trip must parse");
        assert_eq!(reparsed, beta);
    }
});
