#![no_main]

use lapmax::graph::GraphFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = GraphFile::from_json(text) {
            let again = GraphFile::from_json(&file.to_json()).expect("round trip");
            assert_eq!(again.graph, file.graph);
        }
    }
});
