//! Built-in landscape slices.

use lapmax::graph::Graph;
use lapmax::optimize::{Axis, ScanSpec};
use lapmax::{Error, Result};

pub const PRESETS: [&str; 4] = ["c3", "c4_bc", "p3", "k13e"];

fn axis(name: &str, direction: Vec<f64>, max: f64, points: usize) -> Axis {
    Axis {
        name: name.into(),
        direction,
        min: 0.0,
        max,
        points,
    }
}

/// Graph and slice for a preset. Points on the boundary of the length
/// simplex are dropped by the scan.
pub fn preset(name: &str, points: usize, cap: f64) -> Result<(Graph, ScanSpec)> {
    let (graph, base, axes) = match name {
        // lengths (a, b, 1/2 - a - b)
        "c3" => (
            Graph::cycle(3)?,
            vec![0.0, 0.0, 0.5],
            vec![
                axis("a", vec![1.0, 0.0, -1.0], 0.5, points),
                axis("b", vec![0.0, 1.0, -1.0], 0.5, points),
            ],
        ),
        // lengths (a, b, b, 1/2 - a - 2b)
        "c4_bc" => (
            Graph::cycle(4)?,
            vec![0.0, 0.0, 0.0, 0.5],
            vec![
                axis("a", vec![1.0, 0.0, 0.0, -1.0], 0.5, points),
                axis("b", vec![0.0, 1.0, 1.0, -2.0], 0.25, points),
            ],
        ),
        // lengths (a, 1/2 - a)
        "p3" => (
            Graph::path(3)?,
            vec![0.0, 0.5],
            vec![axis("a", vec![1.0, -1.0], 0.5, points)],
        ),
        // star plus an edge, lengths (a, a, 1/2 - 2a - d, d)
        "k13e" => (
            Graph::from_one_based(4, [(1, 2), (1, 3), (1, 4), (2, 3)])?,
            vec![0.0, 0.0, 0.5, 0.0],
            vec![
                axis("a", vec![1.0, 1.0, -2.0, 0.0], 0.25, points),
                axis("d", vec![0.0, 0.0, -1.0, 1.0], 0.5, points),
            ],
        ),
        other => {
            return Err(Error::Parse(format!(
                "unknown preset {other:?}, expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok((graph, ScanSpec { base, axes, cap }))
}
