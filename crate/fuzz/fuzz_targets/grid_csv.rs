#![no_main]
use libfuzzer_sys::fuzz_target;

use maxlin::grid::{phase_boundary, Method};
use maxlin::io::{grid_to_csv, parse_grid_csv};
use maxlin::svg::{render_heatmap, render_noise_sweep};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(rows) = parse_grid_csv(text) {
        let rewritten = grid_to_csv(&rows);
        let reparsed = parse_grid_csv(&rewritten).expect("round trip must parse");
        assert_eq!(reparsed, rows);
        // Downstream consumers of parsed grids must not panic either.
        let _ = phase_boundary(&rows, Method::Ce, 1e-5);
        let _ = render_heatmap(&rows, Method::Ce, 1e-5);
        let _ = render_noise_sweep(&rows);
    }
});
