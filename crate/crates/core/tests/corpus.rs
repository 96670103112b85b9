//! The fuzz corpus seeds are valid inputs for their parsers.

use std::fs;
use std::path::Path;

use lapmax::certificate::CertificateRecord;
use lapmax::graph::{parse_graph, GraphFile};
use lapmax::optimize::ScanSpec;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fuzz/corpus").join(target);
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            (path.display().to_string(), fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn compact_graph_seeds() {
    for (name, text) in seeds("graph_compact") {
        parse_graph(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn json_graph_seeds() {
    for (name, text) in seeds("graph_json") {
        let file = GraphFile::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(GraphFile::from_json(&file.to_json()).unwrap().graph, file.graph);
    }
}

#[test]
fn certificate_seeds() {
    for (name, text) in seeds("certificate_record") {
        let record = CertificateRecord::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(record.max_residual < 1e-8, "{name}");
    }
}

#[test]
fn scan_spec_seeds() {
    for (name, text) in seeds("scan_spec") {
        ScanSpec::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
