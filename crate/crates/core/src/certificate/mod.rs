//! Eigen-map certificates.
//!
//! At an extremal length function the per-edge target vector (all ones for
//! the length problem, `l^2` for the fixed-vertex-weight problem) lies in
//! the convex cone spanned by `q_phi`, `phi` ranging over the first
//! eigenspace. In a basis `phi_1..phi_mu` that cone is
//! `{ (tr(Q_e X))_e : X >= 0 }`, so membership is a PSD feasibility problem
//! for the `mu x mu` Gram matrix `X`. Factoring a feasible `X = B^T B` gives
//! the eigen-map `phi(u)_k = sum_i B_ki phi_i(u)`.

mod dykstra;
mod record;

pub use dykstra::{
    solve_cone_feasibility, Feasibility, FeasibilityOptions, FeasibilityReport, FeasibilityStatus,
};
pub use record::CertificateRecord;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{Graph, LengthFunction, WeightedLaplacian};
use crate::perturbation::{EdgeQuadraticForm, FormMode, BASIS_TOL};
use crate::spectral::{eig_sym, EigenspaceBasis};

/// Gram eigenvalues at or below this fraction of the largest are dropped.
pub const RANK_TOL: f64 = 1e-9;

/// Per-edge forms over the eigenspace spanned by `basis`.
pub fn edge_form_matrices(
    g: &Graph,
    basis: &EigenspaceBasis,
    l: &LengthFunction,
    mode: FormMode,
) -> Result<EdgeQuadraticForm> {
    l.check_for(g)?;
    if let Some(edge) = l.values().iter().position(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveLength {
            edge,
            value: l.values()[edge],
        });
    }
    let residual = basis.orthonormality_residual();
    if !(residual <= BASIS_TOL) {
        return Err(Error::BasisMismatch { residual });
    }
    let mu = basis.multiplicity;
    let phis = basis.functions();
    let lambda1 = basis.lambda1;
    let matrices = g
        .edges()
        .iter()
        .zip(l.values())
        .map(|(e, &len)| {
            let inv2 = 1.0 / (len * len);
            DMatrix::from_fn(mu, mu, |i, j| {
                let di = phis[i][e.u] - phis[i][e.v];
                let dj = phis[j][e.u] - phis[j][e.v];
                match mode {
                    FormMode::Problem1 => {
                        inv2 * (di * dj)
                            + lambda1
                                * (phis[i][e.u] * phis[j][e.u] + phis[i][e.v] * phis[j][e.v])
                    }
                    FormMode::Ghw => di * dj,
                }
            })
        })
        .collect();
    Ok(EdgeQuadraticForm { mode, matrices })
}

/// The per-edge target of the cone membership problem: `1` or `l^2`.
pub fn mode_targets(l: &LengthFunction, mode: FormMode) -> Vec<f64> {
    match mode {
        FormMode::Problem1 => vec![1.0; l.len()],
        FormMode::Ghw => l.values().iter().map(|x| x * x).collect(),
    }
}

/// An eigen-map `phi: V -> R^N` with the data it was built from.
#[derive(Debug, Clone)]
pub struct EmbeddingCertificate {
    pub mode: FormMode,
    pub lambda1: f64,
    pub multiplicity: usize,
    pub constant: f64,
    pub gram: Option<DMatrix<f64>>,
    /// `N x mu` factor with `B^T B = X` (times the constant).
    pub factor: Option<DMatrix<f64>>,
    /// `map[u]` is the point of vertex `u` in `R^N`.
    pub map: Vec<Vec<f64>>,
    /// Per-edge defect of the mode equation.
    pub residuals: Vec<f64>,
    /// `N == 0`: the Gram matrix was zero.
    pub degenerate: bool,
}

impl EmbeddingCertificate {
    /// A certificate from an explicit map, e.g. one written down by hand.
    pub fn from_map(
        g: &Graph,
        l: &LengthFunction,
        lambda1: f64,
        mode: FormMode,
        constant: f64,
        map: Vec<Vec<f64>>,
    ) -> Result<Self> {
        l.check_for(g)?;
        if map.len() != g.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: g.vertex_count(),
                got: map.len(),
            });
        }
        let dim = map.first().map_or(0, Vec::len);
        if let Some(bad) = map.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: bad.len(),
            });
        }
        let residuals = mode_residuals(g, l, lambda1, mode, constant, &map);
        Ok(EmbeddingCertificate {
            mode,
            lambda1,
            multiplicity: dim,
            constant,
            gram: None,
            factor: None,
            degenerate: dim == 0,
            map,
            residuals,
        })
    }

    pub fn dimension(&self) -> usize {
        self.map.first().map_or(0, Vec::len)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Coordinate function `k` of the map.
    pub fn coordinate(&self, k: usize) -> Vec<f64> {
        self.map.iter().map(|p| p[k]).collect()
    }

    /// Scales the map by `sqrt(c)`; the constant becomes `c * C` and every
    /// residual of the rescaled equation is `c` times the old one.
    pub fn rescaled(&self, c: f64) -> Self {
        let s = c.sqrt();
        EmbeddingCertificate {
            constant: self.constant * c,
            gram: self.gram.as_ref().map(|x| x * c),
            factor: self.factor.as_ref().map(|b| b * s),
            map: self
                .map
                .iter()
                .map(|p| p.iter().map(|x| x * s).collect())
                .collect(),
            residuals: self.residuals.iter().map(|r| r * c).collect(),
            ..self.clone()
        }
    }

    /// When `||phi(u)||^2 + ||phi(v)||^2` is the same on every edge (within
    /// `tol` relative), the length equation turns into an isometry after
    /// dividing the map by `sqrt(C - lambda1 * s)`. Returns that map.
    pub fn isometric_rescaling(&self, g: &Graph, tol: f64) -> Option<IsometricMap> {
        if self.mode != FormMode::Problem1 || self.degenerate {
            return None;
        }
        let sums: Vec<f64> = g
            .edges()
            .iter()
            .map(|e| norm2(&self.map[e.u]) + norm2(&self.map[e.v]))
            .collect();
        let lo = sums.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sums.iter().copied().fold(0.0, f64::max);
        if hi - lo > tol * hi.max(f64::MIN_POSITIVE) {
            return None;
        }
        let s = 0.5 * (lo + hi);
        let denom = self.constant - self.lambda1 * s;
        if !(denom > 0.0) {
            return None;
        }
        let k = 1.0 / denom.sqrt();
        Some(IsometricMap {
            map: self
                .map
                .iter()
                .map(|p| p.iter().map(|x| x * k).collect())
                .collect(),
            scale: k,
        })
    }
}

#[derive(Debug, Clone)]
pub struct IsometricMap {
    pub map: Vec<Vec<f64>>,
    pub scale: f64,
}

impl IsometricMap {
    /// `max_e | l(e) - ||phi(u) - phi(v)|| |`.
    pub fn max_defect(&self, g: &Graph, l: &LengthFunction) -> f64 {
        g.edges()
            .iter()
            .zip(l.values())
            .map(|(e, len)| (len - dist2(&self.map[e.u], &self.map[e.v]).sqrt()).abs())
            .fold(0.0, f64::max)
    }
}

fn norm2(p: &[f64]) -> f64 {
    p.iter().map(|x| x * x).sum()
}

fn dist2(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Length mode: `| l^-2 ||dphi||^2 + lambda1 (||phi(u)||^2 + ||phi(v)||^2) - C |`.
/// Edge-weight mode: `| ||dphi||^2 - C l^2 |`.
pub fn mode_residuals(
    g: &Graph,
    l: &LengthFunction,
    lambda1: f64,
    mode: FormMode,
    constant: f64,
    map: &[Vec<f64>],
) -> Vec<f64> {
    g.edges()
        .iter()
        .zip(l.values())
        .map(|(e, &len)| {
            let (p, q) = (&map[e.u], &map[e.v]);
            match mode {
                FormMode::Problem1 => {
                    (dist2(p, q) / (len * len) + lambda1 * (norm2(p) + norm2(q)) - constant).abs()
                }
                FormMode::Ghw => (dist2(p, q) - constant * len * len).abs(),
            }
        })
        .collect()
}

/// Factors `X` and assembles the eigen-map, scaled so that the mode
/// equation holds with constant `constant` (the Gram matrix is assumed to
/// solve the unscaled problem).
pub fn build_embedding(
    x: &DMatrix<f64>,
    basis: &EigenspaceBasis,
    g: &Graph,
    l: &LengthFunction,
    mode: FormMode,
    constant: f64,
) -> Result<EmbeddingCertificate> {
    let mu = basis.multiplicity;
    if x.nrows() != mu || x.ncols() != mu {
        return Err(Error::DimensionMismatch {
            expected: mu,
            got: x.nrows(),
        });
    }
    let spec = eig_sym(x)?;
    let top = spec.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    let bottom = spec.eigenvalues.first().copied().unwrap_or(0.0);
    if bottom < -RANK_TOL * top.max(f64::MIN_POSITIVE) {
        return Err(Error::NotPsd {
            min_eigenvalue: bottom,
        });
    }
    let kept: Vec<usize> = (0..mu)
        .rev()
        .filter(|&k| top > 0.0 && spec.eigenvalues[k] > RANK_TOL * top)
        .collect();
    let s = constant.sqrt();
    let factor = DMatrix::from_fn(kept.len(), mu, |r, i| {
        let k = kept[r];
        s * spec.eigenvalues[k].sqrt() * spec.eigenvectors[(i, k)]
    });
    let n = g.vertex_count();
    let phis = basis.functions();
    let map: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            (0..kept.len())
                .map(|r| (0..mu).map(|i| factor[(r, i)] * phis[i][u]).sum())
                .collect()
        })
        .collect();
    let residuals = if kept.is_empty() {
        // empty map: the defect is the full target
        match mode {
            FormMode::Problem1 => vec![constant; g.edge_count()],
            FormMode::Ghw => l.values().iter().map(|x| constant * x * x).collect(),
        }
    } else {
        mode_residuals(g, l, basis.lambda1, mode, constant, &map)
    };
    Ok(EmbeddingCertificate {
        mode,
        lambda1: basis.lambda1,
        multiplicity: mu,
        constant,
        gram: Some(x * constant),
        factor: Some(factor),
        degenerate: kept.is_empty(),
        map,
        residuals,
    })
}

/// Independent re-check of a certificate.
#[derive(Debug, Clone)]
pub struct CertificateCheck {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// `max_k ||Delta phi_k - lambda1 phi_k||_inf / max(1, lambda1 ||phi_k||_inf)`.
    pub eigen_residual: f64,
    pub pass: bool,
}

/// Relative tolerance for the eigenfunction property of map coordinates.
pub const EIGEN_TOL: f64 = 1e-8;

/// Recomputes the per-edge residuals of the mode equation from the map
/// alone and checks that every coordinate is a `lambda1`-eigenfunction.
pub fn verify_certificate(
    cert: &EmbeddingCertificate,
    lap: &WeightedLaplacian,
    l: &LengthFunction,
    lambda1: f64,
    mode: FormMode,
    tol: f64,
) -> Result<CertificateCheck> {
    let g = lap.graph();
    l.check_for(g)?;
    if cert.map.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            got: cert.map.len(),
        });
    }
    let residuals = if cert.dimension() == 0 {
        match mode {
            FormMode::Problem1 => vec![cert.constant; g.edge_count()],
            FormMode::Ghw => l.values().iter().map(|x| cert.constant * x * x).collect(),
        }
    } else {
        mode_residuals(g, l, lambda1, mode, cert.constant, &cert.map)
    };
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let eigen_residual = (0..cert.dimension())
        .map(|k| {
            let f = cert.coordinate(k);
            let lf = lap.apply(&f);
            let size = f.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let defect = lf
                .iter()
                .zip(&f)
                .fold(0.0f64, |m, (a, b)| m.max((a - lambda1 * b).abs()));
            defect / (lambda1 * size).max(1.0)
        })
        .fold(0.0, f64::max);
    let pass = cert.dimension() > 0 && max_residual < tol && eigen_residual < EIGEN_TOL;
    Ok(CertificateCheck {
        residuals,
        max_residual,
        eigen_residual,
        pass,
    })
}
