#![no_main]
use libfuzzer_sys::fuzz_target;

use maxlin::grid::GridConfig;
use maxlin::synth::SynthConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = serde_json::from_str::<GridConfig>(text) {
        // Validation decides, it must not panic.
        let _ = config.validate();
    }
    if let Ok(config) = serde_json::from_str::<SynthConfig>(text) {
        let _ = config.validate();
    }
});
