//! Reading graphs, length functions and certificates from files.

use std::fs;
use std::path::Path;

use lapmax::graph::{GraphFile, LengthFunction};
use lapmax::{Error, Result};

/// A graph file holds either the JSON graph object or the one-line compact
/// notation (`3 vertices; edges 12,23`).
pub fn read_graph(path: &Path) -> Result<GraphFile> {
    let text = fs::read_to_string(path)?;
    if text.trim_start().starts_with('{') {
        GraphFile::from_json(&text)
    } else {
        Ok(GraphFile::new(lapmax::graph::parse_graph(text.trim())?))
    }
}

/// `uniform`, or a file with a JSON array of lengths. Without `--init` the
/// graph file's own lengths are used, then uniform lengths.
pub fn initial_lengths(spec: Option<&str>, file: &GraphFile) -> Result<LengthFunction> {
    match spec {
        Some("uniform") => Ok(LengthFunction::uniform(file.graph.edge_count())),
        Some(path) => read_lengths(Path::new(path)),
        None => Ok(file
            .lengths
            .clone()
            .unwrap_or_else(|| LengthFunction::uniform(file.graph.edge_count()))),
    }
}

pub fn read_lengths(path: &Path) -> Result<LengthFunction> {
    let text = fs::read_to_string(path)?;
    let values: Vec<f64> =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    LengthFunction::new(values)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}
