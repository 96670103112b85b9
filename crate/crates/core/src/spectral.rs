//! Dense symmetric eigendecomposition and the first nonzero eigenspace.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{EdgeWeight, Graph, VertexWeight, WeightedLaplacian};

/// Sweep limit for the cyclic Jacobi method.
pub const MAX_SWEEPS: usize = 100;

/// Default relative tolerance deciding whether two eigenvalues coincide.
pub const DEFAULT_MULT_TOL: f64 = 1e-7;

/// Relative tolerance (w.r.t. the largest eigenvalue) below which an
/// eigenvalue counts as zero.
const ZERO_TOL: f64 = 1e-12;

/// Eigenvalues in ascending order with Euclidean-orthonormal eigenvectors
/// stored as the matching columns.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    /// `max |A - Q diag(lambda) Q^T|`.
    pub fn reconstruction_residual(&self, a: &DMatrix<f64>) -> f64 {
        let q = &self.eigenvectors;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        let r = q * d * q.transpose() - a;
        r.amax()
    }

    /// `max |Q^T Q - I|`.
    pub fn orthogonality_residual(&self) -> f64 {
        let q = &self.eigenvectors;
        let n = q.ncols();
        (q.transpose() * q - DMatrix::identity(n, n)).amax()
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The first three sweeps only rotate entries above a threshold; afterwards
/// every nonzero off-diagonal entry is rotated, and entries that no longer
/// affect either diagonal element are set to zero.
pub fn eig_sym(matrix: &DMatrix<f64>) -> Result<Spectrum> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: matrix.ncols(),
        });
    }
    if matrix.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let scale = matrix.amax();
    let mut asymmetry = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            asymmetry = asymmetry.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asymmetry > 1e-10 * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }

    // symmetrize so both triangles agree exactly
    let mut a = (matrix + matrix.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];
    let frob = a.norm();

    let mut converged = n <= 1;
    for sweep in 1..=MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].abs();
            }
        }
        if off == 0.0 || off <= 1e-22 * frob {
            converged = true;
            break;
        }
        let thresh = if sweep < 4 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = 100.0 * apq.abs();
                if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[(p, q)] = 0.0;
                } else if apq.abs() > thresh {
                    let h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        apq / h
                    } else {
                        let theta = 0.5 * h / apq;
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    let h = t * apq;
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[(p, q)] = 0.0;
                    let rotate = |m: &mut DMatrix<f64>, i: usize, j: usize, k: usize, l: usize| {
                        let g = m[(i, j)];
                        let h = m[(k, l)];
                        m[(i, j)] = g - s * (h + g * tau);
                        m[(k, l)] = h + s * (g - h * tau);
                    };
                    for j in 0..p {
                        rotate(&mut a, j, p, j, q);
                    }
                    for j in p + 1..q {
                        rotate(&mut a, p, j, j, q);
                    }
                    for j in q + 1..n {
                        rotate(&mut a, p, j, q, j);
                    }
                    for j in 0..n {
                        rotate(&mut v, j, p, j, q);
                    }
                }
            }
        }
        for p in 0..n {
            b[p] += z[p];
            d[p] = b[p];
            z[p] = 0.0;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps: MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let eigenvalues = order.iter().map(|&i| d[i]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// The first nonzero eigenvalue with an `m0`-orthonormal basis of its
/// eigenspace.
#[derive(Debug, Clone)]
pub struct EigenspaceBasis {
    pub lambda1: f64,
    pub multiplicity: usize,
    /// The eigenvalues grouped into the cluster, ascending.
    pub cluster: Vec<f64>,
    /// The first eigenvalue above the cluster, if any.
    pub next_eigenvalue: Option<f64>,
    functions: Vec<Vec<f64>>,
    m0: VertexWeight,
}

impl EigenspaceBasis {
    /// Basis function `i` as a function on vertices.
    pub fn function(&self, i: usize) -> &[f64] {
        &self.functions[i]
    }

    pub fn functions(&self) -> &[Vec<f64>] {
        &self.functions
    }

    pub fn m0(&self) -> &VertexWeight {
        &self.m0
    }

    pub fn vertex_count(&self) -> usize {
        self.m0.values().len()
    }

    /// Builds a basis from explicit functions, e.g. a hand-written one.
    /// The functions are not re-orthonormalized; see
    /// [`EigenspaceBasis::orthonormality_residual`].
    pub fn from_functions(lambda1: f64, functions: Vec<Vec<f64>>, m0: VertexWeight) -> Self {
        EigenspaceBasis {
            lambda1,
            multiplicity: functions.len(),
            cluster: vec![lambda1; functions.len()],
            next_eigenvalue: None,
            functions,
            m0,
        }
    }

    /// Same eigenspace, basis rotated by `rotation` (`new_i = sum_j R_ij old_j`).
    pub fn rotated(&self, rotation: &DMatrix<f64>) -> Self {
        let mu = self.multiplicity;
        let n = self.vertex_count();
        let functions = (0..mu)
            .map(|i| {
                (0..n)
                    .map(|u| (0..mu).map(|j| rotation[(i, j)] * self.functions[j][u]).sum())
                    .collect()
            })
            .collect();
        EigenspaceBasis {
            functions,
            ..self.clone()
        }
    }

    /// Linear combination `sum_i c_i phi_i`.
    pub fn combine(&self, coefficients: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.vertex_count()];
        for (c, f) in coefficients.iter().zip(&self.functions) {
            for (o, x) in out.iter_mut().zip(f) {
                *o += c * x;
            }
        }
        out
    }

    /// `max |<phi_i, phi_j>_{m0} - delta_ij|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let m0 = self.m0.values();
        let mut worst = 0.0f64;
        for (i, fi) in self.functions.iter().enumerate() {
            for (j, fj) in self.functions.iter().enumerate() {
                let ip: f64 = m0.iter().zip(fi).zip(fj).map(|((m, a), b)| m * a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ip - want).abs());
            }
        }
        worst
    }

    /// `max_i max_u |(Delta phi_i)(u) - lambda1 phi_i(u)|`.
    pub fn eigen_residual(&self, lap: &WeightedLaplacian) -> f64 {
        self.functions
            .iter()
            .map(|f| {
                let lf = lap.apply(f);
                lf.iter()
                    .zip(f)
                    .map(|(a, b)| (a - self.lambda1 * b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    /// `max_i |<phi_i, 1>_{m0}|`.
    pub fn mean_residual(&self) -> f64 {
        let m0 = self.m0.values();
        self.functions
            .iter()
            .map(|f| m0.iter().zip(f).map(|(m, x)| m * x).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Extracts `lambda1` and its eigenspace. Eigenvalues within
/// `mult_tol * lambda1` of `lambda1` are grouped into the eigenspace; when
/// the next eigenvalue is within `mult_tol * lambda1` of the last grouped
/// one the grouping is ambiguous and [`Error::DegenerateGap`] is returned.
pub fn first_eigenpair(lap: &WeightedLaplacian, mult_tol: f64) -> Result<EigenspaceBasis> {
    eigenspace(lap, mult_tol, true)
}

/// Like [`first_eigenpair`] but chains the cluster: every eigenvalue within
/// `cluster_tol * lambda1` of the previous grouped one joins. Used by the
/// optimizer to work with nearly coalescing eigenvalues.
pub fn first_cluster(lap: &WeightedLaplacian, cluster_tol: f64) -> Result<EigenspaceBasis> {
    eigenspace(lap, cluster_tol, false)
}

fn eigenspace(lap: &WeightedLaplacian, tol: f64, strict: bool) -> Result<EigenspaceBasis> {
    let spectrum = eig_sym(lap.matrix())?;
    from_spectrum(&spectrum, lap.m0(), tol, strict)
}

fn from_spectrum(
    spectrum: &Spectrum,
    m0: &VertexWeight,
    tol: f64,
    strict: bool,
) -> Result<EigenspaceBasis> {
    let ev = &spectrum.eigenvalues;
    let n = ev.len();
    if n < 2 {
        return Err(Error::ZeroNotSimple { second: f64::NAN });
    }
    let top = ev[n - 1].abs().max(f64::MIN_POSITIVE);
    if ev[1] <= ZERO_TOL * top {
        return Err(Error::ZeroNotSimple { second: ev[1] });
    }
    let lambda1 = ev[1];
    let width = tol * lambda1;
    let mut last = 1;
    if strict {
        while last + 1 < n && ev[last + 1] - lambda1 <= width {
            last += 1;
        }
        if last + 1 < n && ev[last + 1] - ev[last] <= width {
            return Err(Error::DegenerateGap {
                multiplicity: last,
            });
        }
    } else {
        while last + 1 < n && ev[last + 1] - ev[last] <= width {
            last += 1;
        }
    }
    let multiplicity = last;
    let sqrt_m0: Vec<f64> = m0.values().iter().map(|x| x.sqrt()).collect();
    let functions = (1..=last)
        .map(|c| {
            (0..n)
                .map(|u| spectrum.eigenvectors[(u, c)] / sqrt_m0[u])
                .collect()
        })
        .collect();
    Ok(EigenspaceBasis {
        lambda1,
        multiplicity,
        cluster: ev[1..=last].to_vec(),
        next_eigenvalue: ev.get(last + 1).copied(),
        functions,
        m0: m0.clone(),
    })
}

/// `sum_e m1(e) (phi(u) - phi(v))^2 / sum_u m0(u) (phi(u) - mean)^2` with the
/// `m0`-weighted mean.
pub fn rayleigh_quotient(
    g: &Graph,
    phi: &[f64],
    m0: &VertexWeight,
    m1: &EdgeWeight,
) -> Result<f64> {
    let mass = m0.values();
    if phi.len() != mass.len() {
        return Err(Error::DimensionMismatch {
            expected: mass.len(),
            got: phi.len(),
        });
    }
    let total: f64 = mass.iter().sum();
    let mean = mass.iter().zip(phi).map(|(m, x)| m * x).sum::<f64>() / total;
    let denom: f64 = mass
        .iter()
        .zip(phi)
        .map(|(m, x)| m * (x - mean) * (x - mean))
        .sum();
    let size: f64 = mass.iter().zip(phi).map(|(m, x)| m * x * x).sum();
    if !(denom > 1e-24 * size) {
        return Err(Error::ConstantFunction);
    }
    let numer: f64 = g
        .edges()
        .iter()
        .zip(m1.values())
        .map(|(e, w)| w * (phi[e.u] - phi[e.v]).powi(2))
        .sum();
    Ok(numer / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fujiwara_weights, Graph, LengthFunction};

    #[test]
    fn diagonal_and_identity() {
        let s = eig_sym(&DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0]);
        let s = eig_sym(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0; 4]);
    }

    #[test]
    fn c3_uniform_spectrum() {
        let m = DMatrix::from_fn(3, 3, |i, j| if i == j { 36.0 } else { -18.0 });
        let s = eig_sym(&m).unwrap();
        assert!(s.eigenvalues[0].abs() < 1e-12);
        assert!((s.eigenvalues[1] - 54.0).abs() < 1e-12);
        assert!((s.eigenvalues[2] - 54.0).abs() < 1e-12);
        assert!(s.reconstruction_residual(&m) < 1e-10 * 36.0);
        assert!(s.orthogonality_residual() < 1e-13);
    }

    #[test]
    fn rejects_asymmetric_and_nan() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 1.0]);
        assert!(matches!(eig_sym(&m), Err(Error::NotSymmetric { .. })));
        let m = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(eig_sym(&m), Err(Error::NonFinite)));
    }

    fn basis_for(g: &Graph, l: &[f64]) -> (WeightedLaplacian, EigenspaceBasis) {
        let l = LengthFunction::new(l.to_vec()).unwrap();
        let lap = WeightedLaplacian::from_lengths(g, &l).unwrap();
        let b = first_eigenpair(&lap, DEFAULT_MULT_TOL).unwrap();
        (lap, b)
    }

    #[test]
    fn p3_first_eigenpair() {
        let (lap, b) = basis_for(&Graph::path(3).unwrap(), &[0.25, 0.25]);
        assert!((b.lambda1 - 16.0).abs() < 1e-12);
        assert_eq!(b.multiplicity, 1);
        // spans sqrt(2) * (-1, 0, 1) up to sign
        let f = b.function(0);
        let s = f[2].signum();
        let want = [-(2f64.sqrt()), 0.0, 2f64.sqrt()];
        for (x, w) in f.iter().zip(want) {
            assert!((s * x - w).abs() < 1e-12);
        }
        assert!(b.eigen_residual(&lap) < 1e-10);
        assert!(b.orthonormality_residual() < 1e-12);
        assert!(b.mean_residual() < 1e-12);
    }

    #[test]
    fn star_and_p2() {
        let (_, b) = basis_for(&Graph::star(3).unwrap(), &[1.0 / 6.0; 3]);
        assert!((b.lambda1 - 36.0).abs() < 1e-10);
        assert_eq!(b.multiplicity, 2);
        let (_, b) = basis_for(&Graph::path(2).unwrap(), &[0.5]);
        assert!((b.lambda1 - 8.0).abs() < 1e-12);
        assert_eq!(b.multiplicity, 1);
    }

    #[test]
    fn cluster_boundaries() {
        let t = DEFAULT_MULT_TOL;
        let spectrum = |ev: &[f64]| {
            let m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(ev));
            eig_sym(&m).unwrap()
        };
        let m0 = VertexWeight::new(vec![1.0; 4]).unwrap();
        // 1 + 0.6t joins the cluster, 1 + 1.2t is within tol of it: ambiguous
        let s = spectrum(&[0.0, 1.0, 1.0 + 0.6 * t, 1.0 + 1.2 * t]);
        assert!(matches!(
            from_spectrum(&s, &m0, t, true),
            Err(Error::DegenerateGap { multiplicity: 2 })
        ));
        let chained = from_spectrum(&s, &m0, t, false).unwrap();
        assert_eq!(chained.multiplicity, 3);

        let s = spectrum(&[0.0, 1.0, 1.0 + 0.5 * t, 2.0]);
        let b = from_spectrum(&s, &m0, t, true).unwrap();
        assert_eq!(b.multiplicity, 2);
        assert_eq!(b.next_eigenvalue, Some(2.0));

        let s = spectrum(&[0.0, 0.0, 1.0, 2.0]);
        assert!(matches!(
            from_spectrum(&s, &m0, t, true),
            Err(Error::ZeroNotSimple { .. })
        ));
    }

    #[test]
    fn rayleigh_examples() {
        let g = Graph::path(3).unwrap();
        let l = LengthFunction::new(vec![0.25, 0.25]).unwrap();
        let (m0, m1) = fujiwara_weights(&g, &l).unwrap();
        let r = rayleigh_quotient(&g, &[-1.0, 0.0, 1.0], &m0, &m1).unwrap();
        assert!((r - 16.0).abs() < 1e-12);
        assert!(matches!(
            rayleigh_quotient(&g, &[2.0, 2.0, 2.0], &m0, &m1),
            Err(Error::ConstantFunction)
        ));

        let g = Graph::path(2).unwrap();
        let l = LengthFunction::new(vec![0.5]).unwrap();
        let (m0, m1) = fujiwara_weights(&g, &l).unwrap();
        let r = rayleigh_quotient(&g, &[1.0, 0.0], &m0, &m1).unwrap();
        assert!((r - 8.0).abs() < 1e-12);
    }
}
