//! Solvers for the length problem and the edge-weight problem, landscape
//! scans, and the variance duality check.

pub mod direction;
mod ghw;
mod landscape;
mod lengths;
pub mod nelder_mead;

pub use ghw::{
    ghw_concavity_probe, ghw_lambda1, maximize_ghw, project_weights, variance_dual_check,
    ConcavityReport, DualReport, GhwOptions,
};
pub use landscape::{
    export_grid, landscape_scan, Axis, GridRow, GridTable, ScanSpec, BOUNDARY_REL, MAX_AXIS_POINTS,
    MAX_GRID_POINTS,
};
pub use lengths::{maximize_lengths, LengthOptions};

use serde::Serialize;

use crate::certificate::{EmbeddingCertificate, FeasibilityReport};
use crate::perturbation::ExtremalityReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIter,
    BoundaryDivergence,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIter => "max_iter",
            Termination::BoundaryDivergence => "boundary_divergence",
        }
    }
}

#[derive(Debug, Clone)]
pub struct OptResult<P> {
    /// Final lengths or edge weights.
    pub params: P,
    pub lambda1: f64,
    pub multiplicity: usize,
    /// Objective value per accepted iterate.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub termination: Termination,
    /// Length problem only.
    pub extremality: Option<ExtremalityReport>,
    pub feasibility: Option<FeasibilityReport>,
    pub certificate: Option<EmbeddingCertificate>,
    /// Edge-weight problem only.
    pub dual: Option<DualReport>,
    /// Some edge weight was clamped to zero.
    pub degenerate_weights: bool,
}
