//! Eigenvalue landscapes over affine slices of the length simplex.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, LengthFunction, WeightedLaplacian, MAX_VERTICES};
use crate::spectral::{first_cluster, DEFAULT_MULT_TOL};

/// Grid points per axis above this are rejected.
pub const MAX_AXIS_POINTS: usize = 100_000;
/// Total grid size limit.
pub const MAX_GRID_POINTS: usize = 4_000_000;
/// Points with a length below this fraction of the total count as boundary.
pub const BOUNDARY_REL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: String,
    /// Change of the length vector per unit of this coordinate.
    pub direction: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if self.points == 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64
        }
    }
}

/// Lengths `base + sum_k x_k direction_k` over a tensor grid in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub base: Vec<f64>,
    pub axes: Vec<Axis>,
    #[serde(default = "default_cap")]
    pub cap: f64,
}

fn default_cap() -> f64 {
    1e6
}

impl ScanSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScanSpec = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate(spec.base.len())?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scan spec serializes")
    }

    /// Checks sizes, finiteness and that the slice lies in the normalized
    /// hyperplane `2 sum l = 1`.
    pub fn validate(&self, edge_count: usize) -> Result<()> {
        if self.base.len() != edge_count {
            return Err(Error::DimensionMismatch {
                expected: edge_count,
                got: self.base.len(),
            });
        }
        if edge_count == 0 || edge_count > MAX_VERTICES * MAX_VERTICES {
            return Err(Error::Parse("bad edge count".into()));
        }
        if self.axes.is_empty() {
            return Err(Error::Parse("scan needs at least one axis".into()));
        }
        let mut total = 1usize;
        for axis in &self.axes {
            if axis.direction.len() != edge_count {
                return Err(Error::DimensionMismatch {
                    expected: edge_count,
                    got: axis.direction.len(),
                });
            }
            if axis.points == 0 || axis.points > MAX_AXIS_POINTS {
                return Err(Error::Parse(format!(
                    "axis {:?}: points must be in 1..={MAX_AXIS_POINTS}",
                    axis.name
                )));
            }
            total = total.saturating_mul(axis.points);
            if !(axis.min.is_finite() && axis.max.is_finite()) || axis.min > axis.max {
                return Err(Error::Parse(format!("axis {:?}: bad range", axis.name)));
            }
            let sum: f64 = axis.direction.iter().sum();
            if !axis.direction.iter().all(|x| x.is_finite()) {
                return Err(Error::NonFinite);
            }
            if sum.abs() > 1e-12 {
                return Err(Error::NotConstraintPreserving { sum });
            }
        }
        if total > MAX_GRID_POINTS {
            return Err(Error::Parse(format!("grid of {total} points is too large")));
        }
        if !self.base.iter().all(|x| x.is_finite()) || !self.cap.is_finite() {
            return Err(Error::NonFinite);
        }
        let sum: f64 = self.base.iter().sum();
        if (2.0 * sum - 1.0).abs() > 1e-10 {
            return Err(Error::NotConstraintPreserving { sum: 2.0 * sum - 1.0 });
        }
        Ok(())
    }

    fn point_count(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    /// Axis coordinates of grid index `idx`, first axis slowest.
    fn coords(&self, mut idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            out[k] = axis.value(idx % axis.points);
            idx /= axis.points;
        }
        out
    }

    pub fn lengths_at(&self, coords: &[f64]) -> Vec<f64> {
        let mut l = self.base.clone();
        for (axis, x) in self.axes.iter().zip(coords) {
            for (li, d) in l.iter_mut().zip(&axis.direction) {
                *li += x * d;
            }
        }
        l
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub coords: Vec<f64>,
    pub lambda1: f64,
    pub multiplicity: usize,
    pub divergent: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridTable {
    pub axes: Vec<String>,
    pub rows: Vec<GridRow>,
}

impl GridTable {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Row with the largest eigenvalue.
    pub fn argmax(&self) -> Option<&GridRow> {
        self.rows.iter().max_by(|a, b| a.lambda1.total_cmp(&b.lambda1))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for name in &self.axes {
            out.push_str(name);
            out.push(',');
        }
        out.push_str("lambda1,multiplicity,divergent\n");
        for row in &self.rows {
            for x in &row.coords {
                let _ = write!(out, "{x},");
            }
            let _ = writeln!(out, "{},{},{}", row.lambda1, row.multiplicity, row.divergent as u8);
        }
        out
    }
}

/// Writes the table as CSV. Empty tables are refused.
pub fn export_grid(table: &GridTable, path: &Path) -> Result<()> {
    if table.is_empty() {
        return Err(Error::EmptyGrid);
    }
    std::fs::write(path, table.to_csv())?;
    Ok(())
}

/// `lambda1` and multiplicity at every grid point with positive lengths;
/// boundary points are left out.
pub fn landscape_scan(g: &Graph, spec: &ScanSpec) -> Result<GridTable> {
    spec.validate(g.edge_count())?;
    let rows: Vec<Option<GridRow>> = (0..spec.point_count())
        .into_par_iter()
        .map(|idx| {
            let coords = spec.coords(idx);
            let l = spec.lengths_at(&coords);
            // rounding leaves some boundary points with lengths near 1e-17
            let floor = BOUNDARY_REL * l.iter().map(|x| x.abs()).sum::<f64>();
            if l.iter().any(|&x| !(x > floor)) {
                return Ok(None);
            }
            let lap = WeightedLaplacian::from_lengths(g, &LengthFunction::new(l)?)?;
            let basis = first_cluster(&lap, DEFAULT_MULT_TOL)?;
            Ok(Some(GridRow {
                coords,
                lambda1: basis.lambda1,
                multiplicity: basis.multiplicity,
                divergent: basis.lambda1 > spec.cap,
            }))
        })
        .collect::<Result<_>>()?;
    let rows: Vec<GridRow> = rows.into_iter().flatten().collect();
    if rows.is_empty() {
        return Err(Error::EmptyGrid);
    }
    Ok(GridTable {
        axes: spec.axes.iter().map(|a| a.name.clone()).collect(),
        rows,
    })
}
