#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(g) = lapmax::graph::parse_graph(text) {
            assert!(g.edges().iter().all(|e| e.u < e.v && e.v < g.vertex_count()));
        }
    }
});
