//! First-order perturbation of the first nonzero eigenvalue.
//!
//! For weights moving as `m0 + t m0_dot`, `m1 + t m1_dot`, the branches of a
//! `mu`-fold eigenvalue `lambda1` have one-sided derivatives equal to the
//! eigenvalues of the `mu x mu` matrix
//!
//! ```text
//! M_ij = sum_e m1_dot(e) dphi_i(e) dphi_j(e) - lambda1 sum_u m0_dot(u) phi_i(u) phi_j(u)
//! ```
//!
//! where `dphi(e) = phi(u) - phi(v)` and `phi_1..phi_mu` is any
//! `m0`-orthonormal basis of the eigenspace.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, LengthFunction, WeightedLaplacian};
use crate::spectral::{eig_sym, first_eigenpair, EigenspaceBasis};

/// Orthonormality residual above which a basis is rejected.
pub const BASIS_TOL: f64 = 1e-8;

/// Default number of sampled directions in [`extremality_check`].
pub const DEFAULT_DIRECTION_SAMPLES: usize = 100;

/// Default extremality tolerance, relative to `lambda1`.
pub const DEFAULT_EXTREMALITY_REL_TOL: f64 = 1e-6;

/// A graph with a length function, its Laplacian and first eigenspace.
#[derive(Debug, Clone)]
pub struct LengthState {
    pub graph: Graph,
    pub lengths: LengthFunction,
    pub laplacian: WeightedLaplacian,
    pub basis: EigenspaceBasis,
}

impl LengthState {
    pub fn new(graph: &Graph, lengths: &LengthFunction, mult_tol: f64) -> Result<Self> {
        let laplacian = WeightedLaplacian::from_lengths(graph, lengths)?;
        let basis = first_eigenpair(&laplacian, mult_tol)?;
        Ok(LengthState {
            graph: graph.clone(),
            lengths: lengths.clone(),
            laplacian,
            basis,
        })
    }

    pub fn lambda1(&self) -> f64 {
        self.basis.lambda1
    }

    pub fn multiplicity(&self) -> usize {
        self.basis.multiplicity
    }
}

/// Weight velocities `(m0_dot, m1_dot)`, optionally generated by a length
/// velocity `rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationDirection {
    pub m0_dot: Vec<f64>,
    pub m1_dot: Vec<f64>,
    pub rho: Option<Vec<f64>>,
    /// `sum(rho) == 0` within `1e-12`, so the length normalization is kept.
    pub constraint_preserving: bool,
}

impl PerturbationDirection {
    /// A direction given directly in weight space.
    pub fn from_weights(m0_dot: Vec<f64>, m1_dot: Vec<f64>) -> Self {
        PerturbationDirection {
            m0_dot,
            m1_dot,
            rho: None,
            constraint_preserving: false,
        }
    }
}

/// Which per-edge quadratic form is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormMode {
    /// `l^-2 dphi_i dphi_j + lambda1 (phi_i(u) phi_j(u) + phi_i(v) phi_j(v))`.
    Problem1,
    /// `dphi_i dphi_j`, the fixed-vertex-weight problem.
    Ghw,
}

impl FormMode {
    pub fn name(self) -> &'static str {
        match self {
            FormMode::Problem1 => "problem1",
            FormMode::Ghw => "ghw",
        }
    }
}

/// One symmetric `mu x mu` matrix per edge.
#[derive(Debug, Clone)]
pub struct EdgeQuadraticForm {
    pub mode: FormMode,
    pub matrices: Vec<DMatrix<f64>>,
}

impl EdgeQuadraticForm {
    pub fn dim(&self) -> usize {
        self.matrices.first().map_or(0, |m| m.nrows())
    }

    pub fn edge_count(&self) -> usize {
        self.matrices.len()
    }

    /// `(tr(Q_e X))_e`.
    pub fn apply(&self, x: &DMatrix<f64>) -> Vec<f64> {
        self.matrices.iter().map(|q| q.component_mul(x).sum()).collect()
    }

    /// `sum_e y_e Q_e`.
    pub fn adjoint(&self, y: &[f64]) -> DMatrix<f64> {
        let k = self.dim();
        let mut out = DMatrix::zeros(k, k);
        for (q, &w) in self.matrices.iter().zip(y) {
            out += q * w;
        }
        out
    }
}

/// `rho -> (m0_dot, m1_dot)` with `m0_dot(u) = sum_{v~u} rho(uv)` and
/// `m1_dot(e) = -rho(e) / l(e)^2`.
pub fn length_direction_to_weights(
    g: &Graph,
    rho: &[f64],
    l: &LengthFunction,
) -> Result<PerturbationDirection> {
    l.check_for(g)?;
    if rho.len() != g.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: g.edge_count(),
            got: rho.len(),
        });
    }
    let mut m0_dot = vec![0.0; g.vertex_count()];
    for (e, &r) in g.edges().iter().zip(rho) {
        m0_dot[e.u] += r;
        m0_dot[e.v] += r;
    }
    let m1_dot = rho
        .iter()
        .zip(l.values())
        .map(|(r, len)| -r / (len * len))
        .collect();
    let sum: f64 = rho.iter().sum();
    Ok(PerturbationDirection {
        m0_dot,
        m1_dot,
        rho: Some(rho.to_vec()),
        constraint_preserving: sum.abs() <= 1e-12,
    })
}

/// Derivative of the Rayleigh quotient along `dir` for one normalized
/// eigenfunction: `sum_e m1_dot dphi^2 - lambda1 sum_u m0_dot phi^2`.
pub fn scalar_derivative(
    g: &Graph,
    phi: &[f64],
    lambda1: f64,
    dir: &PerturbationDirection,
) -> f64 {
    let edge_part: f64 = g
        .edges()
        .iter()
        .zip(&dir.m1_dot)
        .map(|(e, w)| w * (phi[e.u] - phi[e.v]).powi(2))
        .sum();
    let vertex_part: f64 = dir.m0_dot.iter().zip(phi).map(|(w, x)| w * x * x).sum();
    edge_part - lambda1 * vertex_part
}

/// The degenerate perturbation matrix `M` (see the module docs).
pub fn perturbation_matrix(
    g: &Graph,
    basis: &EigenspaceBasis,
    dir: &PerturbationDirection,
) -> Result<DMatrix<f64>> {
    let residual = basis.orthonormality_residual();
    if !(residual <= BASIS_TOL) {
        return Err(Error::BasisMismatch { residual });
    }
    if dir.m0_dot.len() != g.vertex_count() || dir.m1_dot.len() != g.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: g.edge_count(),
            got: dir.m1_dot.len(),
        });
    }
    let mu = basis.multiplicity;
    let phis = basis.functions();
    let lambda1 = basis.lambda1;
    let mut m = DMatrix::zeros(mu, mu);
    for i in 0..mu {
        for j in i..mu {
            let (a, b) = (&phis[i], &phis[j]);
            let edge_part: f64 = g
                .edges()
                .iter()
                .zip(&dir.m1_dot)
                .map(|(e, w)| w * (a[e.u] - a[e.v]) * (b[e.u] - b[e.v]))
                .sum();
            let vertex_part: f64 = dir
                .m0_dot
                .iter()
                .zip(a.iter().zip(b))
                .map(|(w, (x, y))| w * x * y)
                .sum();
            let v = edge_part - lambda1 * vertex_part;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// One-sided derivatives of the `mu` branches of `lambda1`, ascending.
pub fn branch_derivatives(
    g: &Graph,
    basis: &EigenspaceBasis,
    dir: &PerturbationDirection,
) -> Result<Vec<f64>> {
    let m = perturbation_matrix(g, basis, dir)?;
    Ok(eig_sym(&m)?.eigenvalues)
}

/// `q_phi(uv) = l(uv)^-2 (phi(u) - phi(v))^2 + lambda1 (phi(u)^2 + phi(v)^2)`.
pub fn q_form(g: &Graph, phi: &[f64], l: &LengthFunction, lambda1: f64) -> Result<Vec<f64>> {
    l.check_for(g)?;
    if phi.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: g.vertex_count(),
            got: phi.len(),
        });
    }
    Ok(g.edges()
        .iter()
        .zip(l.values())
        .map(|(e, len)| {
            let d = phi[e.u] - phi[e.v];
            d * d / (len * len) + lambda1 * (phi[e.u] * phi[e.u] + phi[e.v] * phi[e.v])
        })
        .collect())
}

/// Directions uniform on the unit sphere of the hyperplane `sum(rho) = 0`.
/// Empty when the graph has a single edge (the hyperplane is `{0}`).
pub fn sample_directions(edge_count: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    if edge_count < 2 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut v: Vec<f64> = (0..edge_count)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let mean = v.iter().sum::<f64>() / edge_count as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            v.iter_mut().for_each(|x| *x /= norm);
            // the mean removal leaves O(eps) drift; remove it once more
            let mean = v.iter().sum::<f64>() / edge_count as f64;
            v.iter_mut().for_each(|x| *x -= mean);
            out.push(v);
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct DirectionResult {
    pub min_derivative: f64,
    pub max_derivative: f64,
    pub pass: bool,
}

/// Outcome of the sampled first-order test. Passing means no sampled
/// direction raises every branch of `lambda1`; it certifies first-order
/// extremality only, which for `mu > 1` is a necessary condition.
#[derive(Debug, Clone)]
pub struct ExtremalityReport {
    pub lambda1: f64,
    pub multiplicity: usize,
    pub tol: f64,
    pub directions: Vec<DirectionResult>,
    pub pass: bool,
}

impl ExtremalityReport {
    pub fn label(&self) -> &'static str {
        if self.pass {
            "first-order extremal"
        } else {
            "not first-order extremal"
        }
    }

    /// Largest violation `max(min_derivative - tol, -tol - max_derivative)`
    /// over directions, clipped at zero.
    pub fn worst_violation(&self) -> f64 {
        self.directions
            .iter()
            .map(|d| (d.min_derivative - self.tol).max(-self.tol - d.max_derivative))
            .fold(0.0, f64::max)
    }
}

/// Checks `min branch derivative <= tol` and `max branch derivative >= -tol`
/// along every given constraint-preserving length direction.
pub fn extremality_check(
    state: &LengthState,
    directions: &[Vec<f64>],
    tol: f64,
) -> Result<ExtremalityReport> {
    for rho in directions {
        let sum: f64 = rho.iter().sum();
        if sum.abs() > 1e-12 {
            return Err(Error::NotConstraintPreserving { sum });
        }
    }
    let results: Result<Vec<DirectionResult>> = directions
        .par_iter()
        .map(|rho| {
            let dir = length_direction_to_weights(&state.graph, rho, &state.lengths)?;
            let d = branch_derivatives(&state.graph, &state.basis, &dir)?;
            let min_derivative = d[0];
            let max_derivative = d[d.len() - 1];
            Ok(DirectionResult {
                min_derivative,
                max_derivative,
                pass: min_derivative <= tol && max_derivative >= -tol,
            })
        })
        .collect();
    let directions = results?;
    let pass = directions.iter().all(|d| d.pass);
    Ok(ExtremalityReport {
        lambda1: state.lambda1(),
        multiplicity: state.multiplicity(),
        tol,
        directions,
        pass,
    })
}

/// [`extremality_check`] with seeded random directions and the default
/// tolerance `1e-6 * lambda1`.
pub fn extremality_check_sampled(
    state: &LengthState,
    samples: usize,
    seed: u64,
) -> Result<ExtremalityReport> {
    let dirs = sample_directions(state.graph.edge_count(), samples, seed);
    extremality_check(state, &dirs, DEFAULT_EXTREMALITY_REL_TOL * state.lambda1())
}

/// Second-smallest eigenvalue of the Laplacian of `l`.
pub fn lambda1_at(g: &Graph, l: &LengthFunction) -> Result<f64> {
    let lap = WeightedLaplacian::from_lengths(g, l)?;
    Ok(eig_sym(lap.matrix())?.eigenvalues[1])
}

/// One-sided finite differences of `lambda1` along `rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDifference {
    /// `(lambda1(l + h rho) - lambda1(l)) / h`.
    pub forward: f64,
    /// `(lambda1(l) - lambda1(l - h rho)) / h`.
    pub backward: f64,
}

impl FiniteDifference {
    pub fn central(&self) -> f64 {
        0.5 * (self.forward + self.backward)
    }
}

/// Finite-difference estimates of the directional derivative of `lambda1`.
pub fn fd_derivative_oracle(
    g: &Graph,
    l: &LengthFunction,
    rho: &[f64],
    h: f64,
) -> Result<FiniteDifference> {
    l.check_for(g)?;
    if rho.len() != g.edge_count() {
        return Err(Error::DimensionMismatch {
            expected: g.edge_count(),
            got: rho.len(),
        });
    }
    let shifted = |sign: f64| -> Result<LengthFunction> {
        let values: Vec<f64> = l
            .values()
            .iter()
            .zip(rho)
            .map(|(x, r)| x + sign * h * r)
            .collect();
        if let Some(edge) = values.iter().position(|&x| !(x > 0.0)) {
            return Err(Error::StepTooLarge { edge });
        }
        LengthFunction::new(values)
    };
    let plus = shifted(1.0)?;
    let minus = shifted(-1.0)?;
    let at = lambda1_at(g, l)?;
    let up = lambda1_at(g, &plus)?;
    let down = lambda1_at(g, &minus)?;
    Ok(FiniteDifference {
        forward: (up - at) / h,
        backward: (at - down) / h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::DEFAULT_MULT_TOL;

    fn state(g: &Graph, l: &[f64]) -> LengthState {
        LengthState::new(g, &LengthFunction::new(l.to_vec()).unwrap(), DEFAULT_MULT_TOL).unwrap()
    }

    #[test]
    fn zero_direction_gives_zero() {
        let s = state(&Graph::star(3).unwrap(), &[1.0 / 6.0; 3]);
        let dir = length_direction_to_weights(&s.graph, &[0.0; 3], &s.lengths).unwrap();
        assert_eq!(dir.m0_dot, vec![0.0; 4]);
        assert!(dir.constraint_preserving);
        let d = branch_derivatives(&s.graph, &s.basis, &dir).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn uniform_scaling_gives_minus_two_lambda() {
        for (g, l) in [
            (Graph::path(3).unwrap(), vec![0.3, 0.2]),
            (Graph::cycle(3).unwrap(), vec![1.0 / 6.0; 3]),
            (Graph::star(3).unwrap(), vec![0.1, 0.15, 0.25]),
        ] {
            let s = state(&g, &l);
            let dir = length_direction_to_weights(&g, &l, &s.lengths).unwrap();
            assert!(!dir.constraint_preserving);
            let (m0, m1) = (s.laplacian.m0().values(), s.laplacian.m1().values());
            for (a, b) in dir.m0_dot.iter().zip(m0) {
                assert!((a - b).abs() < 1e-15);
            }
            for (a, b) in dir.m1_dot.iter().zip(m1) {
                assert!((a + b).abs() < 1e-12 * b);
            }
            for d in branch_derivatives(&g, &s.basis, &dir).unwrap() {
                assert!((d + 2.0 * s.lambda1()).abs() < 1e-9 * s.lambda1());
            }
        }
    }

    #[test]
    fn p3_balanced_direction() {
        let g = Graph::path(3).unwrap();
        let s = state(&g, &[0.25, 0.25]);
        let dir = length_direction_to_weights(&g, &[1.0, -1.0], &s.lengths).unwrap();
        assert_eq!(dir.m0_dot, vec![1.0, 0.0, -1.0]);
        assert_eq!(dir.m1_dot, vec![-16.0, 16.0]);
        assert!(dir.constraint_preserving);
        let d = branch_derivatives(&g, &s.basis, &dir).unwrap();
        assert!(d[0].abs() < 1e-10);
    }

    #[test]
    fn q_form_examples() {
        let g = Graph::path(3).unwrap();
        let l = LengthFunction::new(vec![0.25, 0.25]).unwrap();
        assert_eq!(q_form(&g, &[0.0; 3], &l, 16.0).unwrap(), vec![0.0, 0.0]);
        let r2 = 2f64.sqrt();
        let q = q_form(&g, &[-r2, 0.0, r2], &l, 16.0).unwrap();
        assert!((q[0] - 64.0).abs() < 1e-12 && (q[1] - 64.0).abs() < 1e-12);
        let k = 1.0 / (4.0 * r2);
        let q = q_form(&g, &[-k, 0.0, k], &l, 16.0).unwrap();
        assert!((q[0] - 1.0).abs() < 1e-14 && (q[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_orthonormal_basis() {
        let g = Graph::path(3).unwrap();
        let s = state(&g, &[0.25, 0.25]);
        let bad = EigenspaceBasis::from_functions(16.0, vec![vec![-1.0, 0.0, 1.0]], s.laplacian.m0().clone());
        let dir = length_direction_to_weights(&g, &[1.0, -1.0], &s.lengths).unwrap();
        assert!(matches!(
            branch_derivatives(&g, &bad, &dir),
            Err(Error::BasisMismatch { .. })
        ));
    }

    #[test]
    fn extremality_on_p3() {
        let g = Graph::path(3).unwrap();
        let at_max = state(&g, &[0.25, 0.25]);
        let report = extremality_check_sampled(&at_max, 100, 7).unwrap();
        assert!(report.pass);
        assert_eq!(report.directions.len(), 100);

        let off = state(&g, &[0.3, 0.2]);
        let report = extremality_check_sampled(&off, 100, 7).unwrap();
        assert!(!report.pass);
        // moving toward a = b = 1/4 raises lambda1: check with differences
        let fd = fd_derivative_oracle(&g, &off.lengths, &[-1.0, 1.0], 1e-6).unwrap();
        assert!(fd.forward > 1.0 && fd.backward > 1.0);
    }

    #[test]
    fn extremality_rejects_unbalanced_directions() {
        let g = Graph::path(3).unwrap();
        let s = state(&g, &[0.25, 0.25]);
        assert!(matches!(
            extremality_check(&s, &[vec![1.0, 0.0]], 1e-6),
            Err(Error::NotConstraintPreserving { .. })
        ));
    }

    #[test]
    fn fd_examples() {
        let g = Graph::path(3).unwrap();
        let l = LengthFunction::new(vec![0.25, 0.25]).unwrap();
        let fd = fd_derivative_oracle(&g, &l, &[0.0, 0.0], 1e-6).unwrap();
        assert_eq!((fd.forward, fd.backward), (0.0, 0.0));
        // One-sided differences carry the curvature term lambda''(a) h / 2 with
        // lambda'' = -1536 from the closed form on P3, i.e. -/+7.68e-4.
        let fd = fd_derivative_oracle(&g, &l, &[1.0, -1.0], 1e-6).unwrap();
        assert!(fd.central().abs() < 1e-4);
        assert!((fd.forward + 7.68e-4).abs() < 1e-6);
        assert!((fd.backward - 7.68e-4).abs() < 1e-6);
        let fd = fd_derivative_oracle(&g, &l, &[0.25, 0.25], 1e-6).unwrap();
        assert!((fd.forward + 32.0).abs() < 1e-3 * 16.0);
        assert!((fd.backward + 32.0).abs() < 1e-3 * 16.0);
        assert!(matches!(
            fd_derivative_oracle(&g, &l, &[1.0, -1.0], 0.5),
            Err(Error::StepTooLarge { edge: 1 })
        ));
    }

    #[test]
    fn sampled_directions_lie_on_hyperplane_sphere() {
        let dirs = sample_directions(5, 50, 3);
        assert_eq!(dirs.len(), 50);
        for d in &dirs {
            assert!(d.iter().sum::<f64>().abs() < 1e-12);
            let n: f64 = d.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
        assert_eq!(dirs, sample_directions(5, 50, 3));
        assert!(sample_directions(1, 10, 0).is_empty());
    }
}
