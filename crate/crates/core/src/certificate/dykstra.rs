//! PSD feasibility `tr(Q_e X) = t_e, X >= 0` by Dykstra's alternating
//! projections, with a separating functional when the problem is infeasible.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::perturbation::EdgeQuadraticForm;
use crate::spectral::eig_sym;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityStatus {
    Feasible,
    Infeasible,
    MaxIter,
}

impl FeasibilityStatus {
    pub fn name(self) -> &'static str {
        match self {
            FeasibilityStatus::Feasible => "feasible",
            FeasibilityStatus::Infeasible => "infeasible",
            FeasibilityStatus::MaxIter => "max_iter",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FeasibilityOptions {
    /// Relative tolerance on both residuals.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations without a 0.1% drop in the affine residual before a
    /// separating functional is tried.
    pub stall_window: usize,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        FeasibilityOptions {
            tol: 1e-9,
            max_iter: 100_000,
            stall_window: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub status: FeasibilityStatus,
    pub iterations: usize,
    /// `max_e |tr(Q_e X) - t_e| / t_e` at the PSD iterate.
    pub affine_residual: f64,
    /// Negative part of the smallest eigenvalue of the affine iterate,
    /// relative to its norm.
    pub psd_residual: f64,
    /// Per-edge `nu` with `<nu, t> > 0` and `sum_e nu_e Q_e` negative
    /// definite; present only when infeasible.
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct Feasibility {
    pub report: FeasibilityReport,
    /// Last PSD iterate. Solves the problem when the status is feasible.
    pub gram: DMatrix<f64>,
}

struct AffineProjector<'a> {
    forms: &'a EdgeQuadraticForm,
    targets: &'a [f64],
    gram_pinv: DMatrix<f64>,
}

impl<'a> AffineProjector<'a> {
    fn new(forms: &'a EdgeQuadraticForm, targets: &'a [f64]) -> Result<Self> {
        let m = forms.edge_count();
        let g = DMatrix::from_fn(m, m, |e, f| {
            forms.matrices[e].component_mul(&forms.matrices[f]).sum()
        });
        Ok(AffineProjector {
            forms,
            targets,
            gram_pinv: pseudo_inverse(&g)?,
        })
    }

    fn project(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let r: Vec<f64> = self
            .forms
            .apply(x)
            .iter()
            .zip(self.targets)
            .map(|(a, t)| a - t)
            .collect();
        let y = &self.gram_pinv * nalgebra::DVector::from_vec(r);
        x - self.forms.adjoint(y.as_slice())
    }
}

fn pseudo_inverse(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let spec = eig_sym(g)?;
    let top = spec.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let cutoff = 1e-12 * top;
    let n = g.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &s) in spec.eigenvalues.iter().enumerate() {
        if s.abs() > cutoff {
            let v = spec.eigenvectors.column(k);
            out += v * v.transpose() / s;
        }
    }
    Ok(out)
}

/// Eigenvalue clipping; also returns the smallest eigenvalue of `z`.
fn project_psd(z: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let spec = eig_sym(z)?;
    let n = z.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &s) in spec.eigenvalues.iter().enumerate() {
        if s > 0.0 {
            let v = spec.eigenvectors.column(k);
            out += v * v.transpose() * s;
        }
    }
    Ok((out, spec.eigenvalues.first().copied().unwrap_or(0.0)))
}

fn affine_residual(forms: &EdgeQuadraticForm, targets: &[f64], x: &DMatrix<f64>) -> f64 {
    forms
        .apply(x)
        .iter()
        .zip(targets)
        .map(|(a, t)| (a - t).abs() / t)
        .fold(0.0, f64::max)
}

fn psd_residual(a: &DMatrix<f64>, min_eigenvalue: f64) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        0.0
    } else {
        (-min_eigenvalue).max(0.0) / norm
    }
}

/// Decides whether `targets` lies in `{ (tr(Q_e X))_e : X >= 0 }`.
///
/// Runs Dykstra's method between the affine set and the PSD cone from
/// `X = 0`. When the affine residual stalls, the remaining defect
/// `t - A(X)` is turned into a candidate separating functional; it is
/// accepted only after checking the separation inequalities exactly, so an
/// `Infeasible` status is never a guess.
pub fn solve_cone_feasibility(
    forms: &EdgeQuadraticForm,
    targets: &[f64],
    opts: &FeasibilityOptions,
) -> Result<Feasibility> {
    let m = forms.edge_count();
    if targets.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: targets.len(),
        });
    }
    if let Some(edge) = targets.iter().position(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::NonPositiveLength {
            edge,
            value: targets[edge],
        });
    }
    let k = forms.dim();
    let proj = AffineProjector::new(forms, targets)?;
    let mut x = DMatrix::zeros(k, k);
    let mut q = DMatrix::zeros(k, k);
    let mut best = f64::INFINITY;
    let mut best_at = 0;
    let mut last_psd = f64::INFINITY;
    let mut last_aff = f64::INFINITY;

    for it in 1..=opts.max_iter {
        let a = proj.project(&x);
        let z = &a + &q;
        let (next, _) = project_psd(&z)?;
        q = z - &next;
        x = next;
        let (_, a_min) = project_psd(&a)?;
        last_psd = psd_residual(&a, a_min);
        last_aff = affine_residual(forms, targets, &x);
        if last_aff <= opts.tol && last_psd <= opts.tol {
            return Ok(Feasibility {
                report: FeasibilityReport {
                    status: FeasibilityStatus::Feasible,
                    iterations: it,
                    affine_residual: last_aff,
                    psd_residual: last_psd,
                    witness: None,
                },
                gram: x,
            });
        }
        if last_aff < best * (1.0 - 1e-3) {
            best = last_aff;
            best_at = it;
        } else if it - best_at >= opts.stall_window {
            if let Some(nu) = separating_functional(forms, targets, &x)? {
                return Ok(Feasibility {
                    report: FeasibilityReport {
                        status: FeasibilityStatus::Infeasible,
                        iterations: it,
                        affine_residual: last_aff,
                        psd_residual: last_psd,
                        witness: Some(nu),
                    },
                    gram: x,
                });
            }
            best_at = it;
        }
    }
    let witness = separating_functional(forms, targets, &x)?;
    let status = if witness.is_some() {
        FeasibilityStatus::Infeasible
    } else {
        FeasibilityStatus::MaxIter
    };
    Ok(Feasibility {
        report: FeasibilityReport {
            status,
            iterations: opts.max_iter,
            affine_residual: last_aff,
            psd_residual: last_psd,
            witness,
        },
        gram: x,
    })
}

/// Candidate from the defect `r = t - A(x)`: its component in the range of
/// the form Gram matrix plus the part orthogonal to it, shifted by a
/// multiple of the all-ones vector so the separation becomes strict.
fn separating_functional(
    forms: &EdgeQuadraticForm,
    targets: &[f64],
    x: &DMatrix<f64>,
) -> Result<Option<Vec<f64>>> {
    let m = forms.edge_count();
    let r: Vec<f64> = forms
        .apply(x)
        .iter()
        .zip(targets)
        .map(|(a, t)| t - a)
        .collect();
    let g = DMatrix::from_fn(m, m, |e, f| {
        forms.matrices[e].component_mul(&forms.matrices[f]).sum()
    });
    let pinv = pseudo_inverse(&g)?;
    let rv = nalgebra::DVector::from_vec(r);
    let range = &pinv * &rv;
    let null = &rv - &g * &range;
    let mut nu: Vec<f64> = (&range + &null).iter().copied().collect();
    let norm = nu.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Ok(None);
    }
    nu.iter_mut().for_each(|v| *v /= norm);

    let total = forms.adjoint(&vec![1.0; m]);
    let total_min = eig_sym(&total)?.eigenvalues[0];
    let combo_max = *eig_sym(&forms.adjoint(&nu))?.eigenvalues.last().unwrap();
    let t_sum: f64 = targets.iter().sum();
    let t_dot: f64 = nu.iter().zip(targets).map(|(a, b)| a * b).sum();
    if total_min > 0.0 {
        let lo = combo_max.max(0.0) / total_min;
        let hi = t_dot / t_sum;
        if !(lo < hi) {
            return Ok(None);
        }
        let eps = lo + 0.01 * (hi - lo);
        nu.iter_mut().for_each(|v| *v -= eps);
    }
    if is_separating(forms, targets, &nu)? {
        Ok(Some(nu))
    } else {
        Ok(None)
    }
}

/// `<nu, t> > 0` and `sum_e nu_e Q_e` negative definite. Then
/// `<nu, A(X)> = tr(X sum nu_e Q_e) <= 0 < <nu, t>` for every `X >= 0`.
pub fn is_separating(forms: &EdgeQuadraticForm, targets: &[f64], nu: &[f64]) -> Result<bool> {
    let t_dot: f64 = nu.iter().zip(targets).map(|(a, b)| a * b).sum();
    let top = *eig_sym(&forms.adjoint(nu))?.eigenvalues.last().unwrap();
    Ok(t_dot > 0.0 && top < 0.0)
}
