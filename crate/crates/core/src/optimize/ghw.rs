//! Maximizing the first nonzero eigenvalue over edge weights at fixed vertex
//! weights and lengths, subject to `sum_e m1(e) l(e)^2 = 1`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::direction::min_norm_element;
use super::{OptResult, Termination};
use crate::certificate::{
    build_embedding, edge_form_matrices, mode_targets, solve_cone_feasibility,
    EmbeddingCertificate, FeasibilityOptions, FeasibilityStatus,
};
use crate::error::{Error, Result};
use crate::graph::{assemble_laplacian, EdgeWeight, Graph, LengthFunction, VertexWeight};
use crate::perturbation::FormMode;
use crate::spectral::{eig_sym, first_cluster, EigenspaceBasis};

#[derive(Debug, Clone)]
pub struct GhwOptions {
    pub max_iter: usize,
    /// Stop once the duality gap is below this.
    pub tol: f64,
    pub cluster_tol: f64,
    /// Final weights below this are set to zero.
    pub clamp: f64,
    pub feasibility: FeasibilityOptions,
}

impl Default for GhwOptions {
    fn default() -> Self {
        GhwOptions {
            max_iter: 10_000,
            tol: 1e-10,
            cluster_tol: 1e-6,
            clamp: 1e-12,
            feasibility: FeasibilityOptions::default(),
        }
    }
}

/// `lambda1` for edge weights `m1`; zero when the support of `m1` does not
/// connect the graph.
pub fn ghw_lambda1(g: &Graph, m0: &VertexWeight, m1: &EdgeWeight) -> Result<f64> {
    match ghw_basis(g, m0, m1, 1e-7) {
        Ok(b) => Ok(b.lambda1),
        Err(Error::DisconnectedSupport) => Ok(0.0),
        Err(e) => Err(e),
    }
}

fn ghw_basis(g: &Graph, m0: &VertexWeight, m1: &EdgeWeight, tol: f64) -> Result<EigenspaceBasis> {
    let lap = assemble_laplacian(g, m0, m1)?;
    first_cluster(&lap, tol)
}

/// Euclidean projection onto `{ x >= 0, <w, x> = 1 }`, `w > 0`.
pub fn project_weights(y: &[f64], w: &[f64]) -> Vec<f64> {
    let at = |tau: f64| -> f64 { y.iter().zip(w).map(|(a, b)| (a - tau * b).max(0.0) * b).sum() };
    // <w, x(tau)> is nonincreasing in tau; below every y/w it is affine
    let ww: f64 = w.iter().map(|b| b * b).sum();
    let yw: f64 = y.iter().zip(w).map(|(a, b)| a * b).sum();
    let ratios = y.iter().zip(w).map(|(a, b)| a / b);
    let mut lo = ratios.clone().fold(f64::INFINITY, f64::min).min((yw - 1.0) / ww) - 1.0;
    let mut hi = ratios.fold(f64::NEG_INFINITY, f64::max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    let mut x: Vec<f64> = y.iter().zip(w).map(|(a, b)| (a - tau * b).max(0.0)).collect();
    let s: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
    if s > 0.0 {
        x.iter_mut().for_each(|v| *v /= s);
    }
    x
}

fn check_inputs(g: &Graph, m0: &VertexWeight, l: &LengthFunction) -> Result<()> {
    l.check_for(g)?;
    if m0.values().len() != g.vertex_count() {
        return Err(Error::InvalidVertexWeight(format!(
            "{} weights for {} vertices",
            m0.values().len(),
            g.vertex_count()
        )));
    }
    if (m0.total() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidVertexWeight(format!(
            "weights sum to {}, expected 1",
            m0.total()
        )));
    }
    Ok(())
}

/// The map `u -> W^{1/2} (phi_1(u), .., phi_mu(u))` scaled down so that no
/// edge is stretched beyond its length.
fn scaled_weight_map(
    g: &Graph,
    l: &LengthFunction,
    basis: &EigenspaceBasis,
    w: &DMatrix<f64>,
) -> Result<EmbeddingCertificate> {
    let spec = eig_sym(w)?;
    let mu = basis.multiplicity;
    let root = DMatrix::from_fn(mu, mu, |i, j| {
        (0..mu)
            .map(|k| spec.eigenvalues[k].max(0.0).sqrt() * spec.eigenvectors[(i, k)] * spec.eigenvectors[(j, k)])
            .sum::<f64>()
    });
    let phis = basis.functions();
    let mut map: Vec<Vec<f64>> = (0..g.vertex_count())
        .map(|u| {
            (0..mu)
                .map(|k| (0..mu).map(|i| root[(k, i)] * phis[i][u]).sum())
                .collect()
        })
        .collect();
    let stretch = g
        .edges()
        .iter()
        .zip(l.values())
        .map(|(e, len)| {
            let d: f64 = map[e.u].iter().zip(&map[e.v]).map(|(a, b)| (a - b) * (a - b)).sum();
            d.sqrt() / len
        })
        .fold(0.0, f64::max);
    if stretch > 0.0 {
        map.iter_mut().flatten().for_each(|x| *x /= stretch);
    }
    EmbeddingCertificate::from_map(g, l, basis.lambda1, FormMode::Ghw, 1.0, map)
}

/// Newton iteration on the optimality system at strictly positive weights:
/// `L(m1) phi = lambda M0 phi` for a map `phi`, `|phi(u) - phi(v)| = l(uv)`
/// on every edge, and `sum m1 l^2 = 1`. Rotations of `phi` leave the system
/// invariant, so each step is a least-squares solve.
fn polish(
    g: &Graph,
    m0: &VertexWeight,
    l: &LengthFunction,
    m1: &[f64],
    lambda: f64,
    map: &[Vec<f64>],
) -> Option<(Vec<f64>, f64)> {
    let n = g.vertex_count();
    let ne = g.edge_count();
    let dim = map.first()?.len();
    let nphi = n * dim;
    let unknowns = ne + nphi + 1;
    let rows = nphi + ne + 1;
    let mut z = DVector::zeros(unknowns);
    z.rows_mut(0, ne).copy_from_slice(m1);
    for u in 0..n {
        for k in 0..dim {
            z[ne + u * dim + k] = map[u][k];
        }
    }
    z[unknowns - 1] = lambda;
    let residual = |z: &DVector<f64>| -> DVector<f64> {
        let phi = |u: usize, k: usize| z[ne + u * dim + k];
        let lam = z[unknowns - 1];
        let mut r = DVector::zeros(rows);
        for u in 0..n {
            for k in 0..dim {
                r[u * dim + k] = -lam * m0.values()[u] * phi(u, k);
            }
        }
        for (j, (e, len)) in g.edges().iter().zip(l.values()).enumerate() {
            let mut sq = 0.0;
            for k in 0..dim {
                let d = phi(e.u, k) - phi(e.v, k);
                r[e.u * dim + k] += z[j] * d;
                r[e.v * dim + k] -= z[j] * d;
                sq += d * d;
            }
            r[nphi + j] = sq - len * len;
            r[rows - 1] += z[j] * len * len;
        }
        r[rows - 1] -= 1.0;
        r
    };
    let jacobian = |z: &DVector<f64>| -> DMatrix<f64> {
        let phi = |u: usize, k: usize| z[ne + u * dim + k];
        let lam = z[unknowns - 1];
        let mut jac = DMatrix::zeros(rows, unknowns);
        for u in 0..n {
            for k in 0..dim {
                let row = u * dim + k;
                jac[(row, ne + row)] -= lam * m0.values()[u];
                jac[(row, unknowns - 1)] = -m0.values()[u] * phi(u, k);
            }
        }
        for (j, (e, len)) in g.edges().iter().zip(l.values()).enumerate() {
            for k in 0..dim {
                let d = phi(e.u, k) - phi(e.v, k);
                let (ru, rv) = (e.u * dim + k, e.v * dim + k);
                jac[(ru, j)] += d;
                jac[(rv, j)] -= d;
                jac[(ru, ne + ru)] += z[j];
                jac[(ru, ne + rv)] -= z[j];
                jac[(rv, ne + rv)] += z[j];
                jac[(rv, ne + ru)] -= z[j];
                jac[(nphi + j, ne + ru)] = 2.0 * d;
                jac[(nphi + j, ne + rv)] = -2.0 * d;
            }
            jac[(rows - 1, j)] = len * len;
        }
        jac
    };
    let scale = lambda.max(1.0);
    let mut r = residual(&z);
    for _ in 0..50 {
        if r.amax() <= 1e-14 * scale {
            break;
        }
        let jac = jacobian(&z);
        let eps = 1e-12 * jac.amax();
        let step = jac.svd(true, true).solve(&(-&r), eps).ok()?;
        z += step;
        r = residual(&z);
        if !r.iter().all(|x| x.is_finite()) {
            return None;
        }
    }
    if r.amax() > 1e-12 * scale {
        return None;
    }
    let weights: Vec<f64> = z.rows(0, ne).iter().copied().collect();
    if weights.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    Some((weights, z[unknowns - 1]))
}

/// Projected steepest ascent on the concave function `m1 -> lambda1`.
pub fn maximize_ghw(
    g: &Graph,
    m0: &VertexWeight,
    l: &LengthFunction,
    opts: &GhwOptions,
) -> Result<OptResult<EdgeWeight>> {
    check_inputs(g, m0, l)?;
    let w2: Vec<f64> = l.values().iter().map(|x| x * x).collect();
    let total: f64 = w2.iter().sum();
    let mut m1 = vec![1.0 / total; g.edge_count()];
    let mut trace = Vec::new();
    let mut step = f64::NAN;
    let mut termination = Termination::MaxIter;
    let mut iterations = 0;

    for _ in 0..opts.max_iter {
        iterations += 1;
        let basis = ghw_basis(g, m0, &EdgeWeight::new(m1.clone())?, opts.cluster_tol)?;
        let lambda = basis.lambda1;
        trace.push(lambda);
        let forms = edge_form_matrices(g, &basis, l, FormMode::Ghw)?;
        let mn = min_norm_element(&forms, &w2, 2000)?;
        let dual = scaled_weight_map(g, l, &basis, &mn.weight)?;
        let var: f64 = dual
            .map
            .iter()
            .zip(m0.values())
            .map(|(p, m)| m * p.iter().map(|x| x * x).sum::<f64>())
            .sum();
        if 1.0 / lambda - var < opts.tol {
            termination = Termination::Converged;
            break;
        }
        if !(mn.rate > 0.0) {
            termination = Termination::Converged;
            break;
        }
        let d: Vec<f64> = mn.vector.iter().map(|v| v / mn.rate).collect();
        if step.is_nan() {
            step = 0.1 * m1.iter().map(|x| x * x).sum::<f64>().sqrt();
        }
        let mut t = 2.0 * step;
        let mut accepted = None;
        while t > 1e-16 * (1.0 / total) {
            let y: Vec<f64> = m1.iter().zip(&d).map(|(a, b)| a + t * b).collect();
            let trial = project_weights(&y, &w2);
            let moved: f64 = trial.iter().zip(&m1).zip(&d).map(|((a, b), c)| (a - b) * c).sum();
            let lam = ghw_lambda1(g, m0, &EdgeWeight::new(trial.clone())?)?;
            if lam > lambda && lam >= lambda + 1e-4 * mn.rate * moved {
                accepted = Some(trial);
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some(next) => {
                m1 = next;
                step = t;
            }
            None => {
                termination = Termination::Converged;
                break;
            }
        }
    }

    if m1.iter().all(|&x| x >= opts.clamp) {
        let basis = ghw_basis(g, m0, &EdgeWeight::new(m1.clone())?, opts.cluster_tol)?;
        let forms = edge_form_matrices(g, &basis, l, FormMode::Ghw)?;
        let mn = min_norm_element(&forms, &w2, 2000)?;
        let start = scaled_weight_map(g, l, &basis, &mn.weight)?;
        if let Some((next, lam)) = polish(g, m0, l, &m1, basis.lambda1, &start.map) {
            let actual = ghw_lambda1(g, m0, &EdgeWeight::new(next.clone())?)?;
            if (actual - lam).abs() <= 1e-9 * lam && actual >= basis.lambda1 * (1.0 - 1e-12) {
                m1 = next;
                trace.push(actual);
            }
        }
    }

    let degenerate_weights = m1.iter().any(|&x| x < opts.clamp);
    for x in m1.iter_mut() {
        if *x < opts.clamp {
            *x = 0.0;
        }
    }
    let weights = EdgeWeight::new(m1)?;
    let basis = ghw_basis(g, m0, &weights, opts.cluster_tol)?;
    let lambda1 = basis.lambda1;
    let forms = edge_form_matrices(g, &basis, l, FormMode::Ghw)?;
    let feas = solve_cone_feasibility(&forms, &mode_targets(l, FormMode::Ghw), &opts.feasibility)?;
    let certificate = if feas.report.status == FeasibilityStatus::Feasible {
        Some(build_embedding(&feas.gram, &basis, g, l, FormMode::Ghw, 1.0)?)
    } else {
        None
    };
    let dual_map = match &certificate {
        Some(c) => c.clone(),
        None => {
            let mn = min_norm_element(&forms, &mode_targets(l, FormMode::Ghw), 2000)?;
            scaled_weight_map(g, l, &basis, &mn.weight)?
        }
    };
    let dual = variance_dual_check(&dual_map, g, l, m0, Some(&weights), lambda1, 1e-8)?;
    Ok(OptResult {
        params: weights,
        lambda1,
        multiplicity: basis.multiplicity,
        trace,
        iterations,
        termination,
        extremality: None,
        feasibility: Some(feas.report),
        certificate,
        dual: Some(dual),
        degenerate_weights,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DualReport {
    /// `sum_u m0(u) |phi(u)|^2` after centring.
    pub variance: f64,
    pub inverse_lambda1: f64,
    /// `1 / lambda1 - variance`.
    pub gap: f64,
    pub weak_duality: bool,
    /// `max_e (|phi(u) - phi(v)| - l(e))`, clipped at 0.
    pub max_edge_excess: f64,
    pub feasible: bool,
    /// `m1(e) (l(e)^2 - |phi(u) - phi(v)|^2)` per edge, when weights are given.
    pub slackness: Option<Vec<f64>>,
    pub max_slackness: f64,
    /// `max | |phi(u) - phi(v)| - l(e) |` over edges with positive weight.
    pub isometry_residual: f64,
    pub pass: bool,
}

/// Compares the variance of a map with `1 / lambda1` and checks edge
/// feasibility and complementary slackness.
pub fn variance_dual_check(
    cert: &EmbeddingCertificate,
    g: &Graph,
    l: &LengthFunction,
    m0: &VertexWeight,
    m1: Option<&EdgeWeight>,
    lambda1: f64,
    tol: f64,
) -> Result<DualReport> {
    if cert.mode != FormMode::Ghw {
        return Err(Error::WrongMode { expected: "ghw" });
    }
    l.check_for(g)?;
    let dim = cert.dimension();
    let total = m0.total();
    let mut map = cert.map.clone();
    for k in 0..dim {
        let mean = map.iter().zip(m0.values()).map(|(p, m)| m * p[k]).sum::<f64>() / total;
        map.iter_mut().for_each(|p| p[k] -= mean);
    }
    let variance: f64 = map
        .iter()
        .zip(m0.values())
        .map(|(p, m)| m * p.iter().map(|x| x * x).sum::<f64>())
        .sum();
    let edge_len: Vec<f64> = g
        .edges()
        .iter()
        .map(|e| {
            map[e.u]
                .iter()
                .zip(&map[e.v])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let max_edge_excess = edge_len
        .iter()
        .zip(l.values())
        .map(|(d, len)| (d - len).max(0.0))
        .fold(0.0, f64::max);
    let slackness = m1.map(|w| {
        w.values()
            .iter()
            .zip(l.values())
            .zip(&edge_len)
            .map(|((m, len), d)| m * (len * len - d * d))
            .collect::<Vec<f64>>()
    });
    let max_slackness = slackness
        .as_ref()
        .map_or(0.0, |s| s.iter().fold(0.0f64, |m, x| m.max(x.abs())));
    let isometry_residual = match m1 {
        Some(w) => edge_len
            .iter()
            .zip(l.values())
            .zip(w.values())
            .filter(|(_, m)| **m > 0.0)
            .map(|((d, len), _)| (d - len).abs())
            .fold(0.0, f64::max),
        None => 0.0,
    };
    let inverse_lambda1 = 1.0 / lambda1;
    let weak_duality = variance <= inverse_lambda1 + tol;
    let feasible = max_edge_excess <= tol;
    Ok(DualReport {
        variance,
        inverse_lambda1,
        gap: inverse_lambda1 - variance,
        weak_duality,
        max_edge_excess,
        feasible,
        slackness,
        max_slackness,
        isometry_residual,
        pass: weak_duality && feasible,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConcavityReport {
    pub checks: usize,
    /// Largest `t f(a) + (1 - t) f(b) - f(t a + (1 - t) b)`.
    pub worst_violation: f64,
    pub pass: bool,
}

/// Random pairs of positive normalized weights; checks midpoint concavity at
/// `t = 0.25, 0.5, 0.75`.
pub fn ghw_concavity_probe(
    g: &Graph,
    m0: &VertexWeight,
    l: &LengthFunction,
    pairs: usize,
    seed: u64,
) -> Result<ConcavityReport> {
    l.check_for(g)?;
    let w2: Vec<f64> = l.values().iter().map(|x| x * x).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sample = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let raw: Vec<f64> = (0..g.edge_count()).map(|_| rng.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().zip(&w2).map(|(a, b)| a * b).sum();
        raw.iter().map(|x| x / s).collect()
    };
    let mut worst = f64::NEG_INFINITY;
    let mut checks = 0;
    for _ in 0..pairs {
        let a = sample(&mut rng);
        let b = sample(&mut rng);
        let fa = ghw_lambda1(g, m0, &EdgeWeight::new(a.clone())?)?;
        let fb = ghw_lambda1(g, m0, &EdgeWeight::new(b.clone())?)?;
        for t in [0.25, 0.5, 0.75] {
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| t * x + (1.0 - t) * y).collect();
            let fm = ghw_lambda1(g, m0, &EdgeWeight::new(mix)?)?;
            worst = worst.max(t * fa + (1.0 - t) * fb - fm);
            checks += 1;
        }
    }
    Ok(ConcavityReport {
        checks,
        worst_violation: worst,
        pass: worst <= 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_projection() {
        let x = project_weights(&[0.5, 0.5], &[1.0, 1.0]);
        assert!((x[0] - 0.5).abs() < 1e-15 && (x[1] - 0.5).abs() < 1e-15);
        let x = project_weights(&[3.0, -2.0, 0.1], &[1.0, 2.0, 0.5]);
        assert!(x.iter().all(|v| *v >= 0.0));
        let s: f64 = x.iter().zip([1.0, 2.0, 0.5]).map(|(a, b)| a * b).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(x[1], 0.0);
    }

    #[test]
    fn p2_single_weight() {
        let g = Graph::path(2).unwrap();
        let m0 = VertexWeight::new(vec![0.5, 0.5]).unwrap();
        let l = LengthFunction::new(vec![1.0]).unwrap();
        let r = maximize_ghw(&g, &m0, &l, &Default::default()).unwrap();
        assert_eq!(r.params.values(), &[1.0]);
        assert!((r.lambda1 - 4.0).abs() < 1e-12);
        let dual = r.dual.unwrap();
        assert!(dual.gap.abs() < 1e-12);
        assert!((dual.variance - 0.25).abs() < 1e-12);
    }

    #[test]
    fn p3_symmetric() {
        let g = Graph::path(3).unwrap();
        let m0 = VertexWeight::new(vec![1.0 / 3.0; 3]).unwrap();
        let l = LengthFunction::new(vec![1.0, 1.0]).unwrap();
        let r = maximize_ghw(&g, &m0, &l, &Default::default()).unwrap();
        assert!(r.params.values().iter().all(|x| (x - 0.5).abs() < 1e-9));
        assert!((r.lambda1 - 1.5).abs() < 1e-9);
        let dual = r.dual.unwrap();
        assert!(dual.gap.abs() < 1e-9);
        assert!(dual.max_slackness < 1e-8);
    }

    #[test]
    fn p3_skewed_lengths_trace_monotone() {
        let g = Graph::path(3).unwrap();
        let m0 = VertexWeight::new(vec![0.2, 0.5, 0.3]).unwrap();
        let l = LengthFunction::new(vec![1.0, 2.0]).unwrap();
        let r = maximize_ghw(&g, &m0, &l, &Default::default()).unwrap();
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        // brute-force over the one free parameter
        let mut best = 0.0f64;
        for i in 1..100_000 {
            let s = i as f64 / 100_000.0;
            let m1 = vec![s, (1.0 - s) / 4.0];
            best = best.max(ghw_lambda1(&g, &m0, &EdgeWeight::new(m1).unwrap()).unwrap());
        }
        assert!((r.lambda1 - best).abs() < 1e-6 * best, "{} vs {}", r.lambda1, best);
        assert!(r.dual.unwrap().gap < 1e-6);
    }

    #[test]
    fn c4_double_eigenvalue_optimum() {
        // the maximizer has lambda1 = lambda2; ascent alone stalls short of it
        let g = Graph::cycle(4).unwrap();
        let m0 = VertexWeight::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let l = LengthFunction::new(vec![1.0, 0.5, 2.0, 1.0]).unwrap();
        let r = maximize_ghw(&g, &m0, &l, &Default::default()).unwrap();
        assert_eq!(r.multiplicity, 2);
        assert!(r.certificate.is_some());
        let dual = r.dual.unwrap();
        assert!(dual.gap.abs() < 1e-10 && dual.max_slackness < 1e-10, "{dual:?}");
        assert!(r.lambda1 > 1.09938046);
    }

    #[test]
    fn dual_check_rejects_problem1_certificate() {
        let g = Graph::path(2).unwrap();
        let l = LengthFunction::new(vec![0.5]).unwrap();
        let cert = EmbeddingCertificate::from_map(&g, &l, 8.0, FormMode::Problem1, 1.0, vec![vec![0.1], vec![-0.1]])
            .unwrap();
        let m0 = VertexWeight::new(vec![0.5, 0.5]).unwrap();
        assert!(matches!(
            variance_dual_check(&cert, &g, &l, &m0, None, 8.0, 1e-9),
            Err(Error::WrongMode { .. })
        ));
    }

    #[test]
    fn concavity_on_small_graphs() {
        let g = Graph::cycle(4).unwrap();
        let m0 = VertexWeight::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let l = LengthFunction::new(vec![1.0, 0.5, 2.0, 1.0]).unwrap();
        let r = ghw_concavity_probe(&g, &m0, &l, 50, 7).unwrap();
        assert!(r.pass, "{}", r.worst_violation);
        assert_eq!(r.checks, 150);
    }
}
