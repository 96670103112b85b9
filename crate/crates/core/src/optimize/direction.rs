//! Steepest ascent for a maximum eigenvalue over an eigenspace.
//!
//! With per-edge forms `Q_e` on a `mu`-dimensional eigenspace, the branch
//! derivatives along an edge direction `d` are the eigenvalues of
//! `sigma * sum_e d_e Q_e` (`sigma = -1` for lengths, `+1` for edge
//! weights), so the smallest one is `min_W sigma <d, A(W)>` over the
//! spectrahedron `{W >= 0, tr W = 1}`. Maximizing that over unit tangent
//! directions is a minimax problem whose value is the distance from the
//! origin to `{ P A(W) }`, `P` the projection onto the tangent space.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::perturbation::EdgeQuadraticForm;
use crate::spectral::eig_sym;

#[derive(Debug, Clone)]
pub struct MinNorm {
    /// `P A(W)` at the minimizer.
    pub vector: Vec<f64>,
    /// Its norm: the guaranteed first-order rate along `sigma * vector / rate`.
    pub rate: f64,
    pub weight: DMatrix<f64>,
}

/// Projection onto the orthogonal complement of `normal`.
pub fn tangent_projection(v: &[f64], normal: &[f64]) -> Vec<f64> {
    let nn: f64 = normal.iter().map(|x| x * x).sum();
    let k: f64 = v.iter().zip(normal).map(|(a, b)| a * b).sum::<f64>() / nn;
    v.iter().zip(normal).map(|(a, b)| a - k * b).collect()
}

/// Euclidean projection onto the probability simplex.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, x) in s.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

fn project_spectrahedron(y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let spec = eig_sym(y)?;
    let w = project_simplex(&spec.eigenvalues);
    let n = y.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (k, &s) in w.iter().enumerate() {
        if s > 0.0 {
            let v = spec.eigenvectors.column(k);
            out += v * v.transpose() * s;
        }
    }
    Ok(out)
}

/// Accelerated projected gradient on `W -> |P A(W)|^2 / 2`, started from
/// `I / mu` (exact at symmetric points).
pub fn min_norm_element(
    forms: &EdgeQuadraticForm,
    normal: &[f64],
    max_iter: usize,
) -> Result<MinNorm> {
    let mu = forms.dim();
    let eval = |w: &DMatrix<f64>| tangent_projection(&forms.apply(w), normal);
    let mut w = DMatrix::identity(mu, mu) / mu as f64;
    let mut v = eval(&w);
    if mu == 1 {
        let rate = norm(&v);
        return Ok(MinNorm {
            vector: v,
            rate,
            weight: w,
        });
    }
    let lipschitz: f64 = forms.matrices.iter().map(|q| q.norm_squared()).sum();
    if !(lipschitz > 0.0) {
        return Ok(MinNorm {
            rate: norm(&v),
            vector: v,
            weight: w,
        });
    }
    let step = 1.0 / lipschitz;
    let mut y = w.clone();
    let mut t = 1.0f64;
    let mut best = (norm(&v), w.clone(), v.clone());
    for _ in 0..max_iter {
        // Frank-Wolfe gap at the feasible iterate bounds the suboptimality
        let gw = forms.adjoint(&v);
        let gap = gw.component_mul(&w).sum() - eig_sym(&gw)?.eigenvalues[0];
        if gap <= 1e-15 * lipschitz.sqrt() * best.0 {
            break;
        }
        let grad = forms.adjoint(&eval(&y));
        let next = project_spectrahedron(&(&y - grad * step))?;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &next + (&next - &w) * ((t - 1.0) / t_next);
        w = next;
        t = t_next;
        v = eval(&w);
        let r = norm(&v);
        if r < best.0 {
            best = (r, w.clone(), v.clone());
        }
    }
    Ok(MinNorm {
        rate: best.0,
        weight: best.1,
        vector: best.2,
    })
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbation::FormMode;

    #[test]
    fn simplex_projection() {
        assert_eq!(project_simplex(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(project_simplex(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = project_simplex(&[0.3, -1.0, 0.9]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(p.iter().all(|x| *x >= 0.0));
    }

    #[test]
    fn zero_when_target_in_cone() {
        // forms diag(1,0), diag(0,1): A(W) = diag(W), P removes the mean
        let forms = EdgeQuadraticForm {
            mode: FormMode::Problem1,
            matrices: vec![
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
                DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]),
            ],
        };
        let r = min_norm_element(&forms, &[1.0, 1.0], 1000).unwrap();
        assert!(r.rate < 1e-14);
    }

    #[test]
    fn positive_when_not() {
        // A(W) = (W11 + W22, W11): P A(W) = (W22, -W22) / 2 with W22 >= 0
        let forms = EdgeQuadraticForm {
            mode: FormMode::Problem1,
            matrices: vec![
                DMatrix::identity(2, 2),
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            ],
        };
        let r = min_norm_element(&forms, &[1.0, 1.0], 5000).unwrap();
        assert!(r.rate < 1e-6, "{}", r.rate);
        let forms = EdgeQuadraticForm {
            mode: FormMode::Problem1,
            matrices: vec![
                DMatrix::identity(2, 2) * 2.0,
                DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            ],
        };
        // A(W) = (2, W11): P A(W) = ((2 - W11), (W11 - 2)) / 2, smallest at W11 = 1
        let r = min_norm_element(&forms, &[1.0, 1.0], 5000).unwrap();
        assert!((r.rate - 0.5f64.sqrt()).abs() < 1e-9, "{}", r.rate);
    }
}
