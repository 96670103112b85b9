use nalgebra::{DMatrix, DVector};

use super::direction::{min_norm_element, norm};
use super::nelder_mead::{self, Eval, NelderMeadOptions};
use super::{OptResult, Termination};
use crate::certificate::{
    build_embedding, edge_form_matrices, mode_targets, solve_cone_feasibility, FeasibilityOptions,
    FeasibilityStatus,
};
use crate::error::{Error, Result};
use crate::graph::{normalize_lengths, Graph, LengthFunction, WeightedLaplacian};
use crate::perturbation::{extremality_check_sampled, q_form, FormMode, LengthState};
use crate::spectral::{first_cluster, DEFAULT_MULT_TOL};

#[derive(Debug, Clone)]
pub struct LengthOptions {
    /// Iterations of the first-order phase.
    pub max_iter: usize,
    pub nelder_mead: NelderMeadOptions,
    /// Skip the derivative-free phase.
    pub skip_polish: bool,
    /// Stop when the steepest ascent rate is at most `grad_tol * lambda1`.
    pub grad_tol: f64,
    /// Relative width of the eigenvalue cluster treated as one eigenspace.
    pub cluster_tol: f64,
    pub boundary_eps: f64,
    pub cap: f64,
    pub direction_samples: usize,
    pub seed: u64,
    pub feasibility: FeasibilityOptions,
}

impl Default for LengthOptions {
    fn default() -> Self {
        LengthOptions {
            max_iter: 500,
            nelder_mead: NelderMeadOptions::default(),
            skip_polish: false,
            grad_tol: 1e-10,
            cluster_tol: 1e-6,
            boundary_eps: 1e-9,
            cap: 1e6,
            direction_samples: crate::perturbation::DEFAULT_DIRECTION_SAMPLES,
            seed: 0,
            feasibility: FeasibilityOptions::default(),
        }
    }
}

fn check_init(g: &Graph, init: &LengthFunction) -> Result<()> {
    if init.len() != g.edge_count() {
        return Err(Error::InvalidInit(format!(
            "{} lengths for {} edges",
            init.len(),
            g.edge_count()
        )));
    }
    if init.values().iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidInit("lengths must be positive".into()));
    }
    let total = 2.0 * init.total();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidInit(format!(
            "lengths not normalized (2 * sum = {total})"
        )));
    }
    Ok(())
}

fn clustered_state(g: &Graph, l: &LengthFunction, tol: f64) -> Result<LengthState> {
    let laplacian = WeightedLaplacian::from_lengths(g, l)?;
    let basis = first_cluster(&laplacian, tol)?;
    Ok(LengthState {
        graph: g.clone(),
        lengths: l.clone(),
        laplacian,
        basis,
    })
}

fn min_length(l: &LengthFunction) -> f64 {
    l.values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Lengths from log coordinates; the last edge is the reference.
fn from_log(y: &[f64]) -> Result<LengthFunction> {
    let mut x: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    x.push(1.0);
    normalize_lengths(&LengthFunction::new(x)?)
}

/// Maximizes the first nonzero eigenvalue over normalized lengths from
/// `init`: Nelder–Mead in log coordinates, then steepest ascent with the
/// eigenvalue cluster taken into account.
pub fn maximize_lengths(
    g: &Graph,
    init: &LengthFunction,
    opts: &LengthOptions,
) -> Result<OptResult<LengthFunction>> {
    check_init(g, init)?;
    let diverged = |lam: f64, l: &LengthFunction| lam > opts.cap || min_length(l) < opts.boundary_eps;
    let mut trace = Vec::new();
    let mut l = init.clone();
    let mut iterations = 0;

    let mut lambda = crate::perturbation::lambda1_at(g, &l)?;
    trace.push(lambda);
    let mut termination = None;
    if diverged(lambda, &l) {
        termination = Some(Termination::BoundaryDivergence);
    }

    if termination.is_none() && !opts.skip_polish && g.edge_count() > 1 {
        let v = init.values();
        let last = v[v.len() - 1].ln();
        let y0: Vec<f64> = v[..v.len() - 1].iter().map(|x| x.ln() - last).collect();
        let nm = nelder_mead::minimize(
            |y| {
                let Ok(lf) = from_log(y) else {
                    return Eval::Value(f64::INFINITY);
                };
                match crate::perturbation::lambda1_at(g, &lf) {
                    Ok(lam) if diverged(lam, &lf) => Eval::Stop(-lam),
                    Ok(lam) => Eval::Value(-lam),
                    Err(_) => Eval::Value(f64::INFINITY),
                }
            },
            &y0,
            &opts.nelder_mead,
        );
        iterations += nm.trace.len();
        trace.extend(nm.trace.iter().map(|v| -v));
        // gains at the level of rounding are not evidence of ascent
        if -nm.value > lambda * (1.0 + 1e-12) {
            l = from_log(&nm.x)?;
            lambda = -nm.value;
        }
        if nm.aborted {
            termination = Some(Termination::BoundaryDivergence);
        }
    }

    if termination.is_none() && g.edge_count() > 1 {
        termination = Some(ascend(g, &mut l, &mut lambda, &mut trace, &mut iterations, opts)?);
    }
    let termination = termination.unwrap_or(Termination::Converged);
    finish(g, l, lambda, trace, iterations, termination, opts)
}

fn ascend(
    g: &Graph,
    l: &mut LengthFunction,
    lambda: &mut f64,
    trace: &mut Vec<f64>,
    iterations: &mut usize,
    opts: &LengthOptions,
) -> Result<Termination> {
    let ones = vec![1.0; g.edge_count()];
    let mut step = 0.1 * min_length(l);
    for _ in 0..opts.max_iter {
        *iterations += 1;
        let state = clustered_state(g, l, opts.cluster_tol)?;
        *lambda = state.lambda1();
        let forms = edge_form_matrices(g, &state.basis, l, FormMode::Problem1)?;
        let mn = min_norm_element(&forms, &ones, 2000)?;
        if mn.rate <= opts.grad_tol * *lambda {
            return Ok(Termination::Converged);
        }
        if state.multiplicity() == 1 {
            if let Some((next, lam)) = newton_step(g, l, &state)? {
                *l = next;
                *lambda = lam;
                trace.push(lam);
                if lam > opts.cap || min_length(l) < opts.boundary_eps {
                    return Ok(Termination::BoundaryDivergence);
                }
                continue;
            }
        }
        let rho: Vec<f64> = mn.vector.iter().map(|v| -v / mn.rate).collect();
        // keep at least half of every length
        let room = l
            .values()
            .iter()
            .zip(&rho)
            .filter(|(_, r)| **r < 0.0)
            .map(|(x, r)| -0.5 * x / r)
            .fold(f64::INFINITY, f64::min);
        let mut t = (2.0 * step).min(room);
        let mut accepted = None;
        while t > 1e-15 * min_length(l) {
            let trial: Vec<f64> = l.values().iter().zip(&rho).map(|(x, r)| x + t * r).collect();
            let trial = normalize_lengths(&LengthFunction::new(trial)?)?;
            let lam = crate::perturbation::lambda1_at(g, &trial)?;
            if lam >= *lambda + 1e-4 * t * mn.rate {
                accepted = Some((trial, lam));
                break;
            }
            t *= 0.5;
        }
        let Some((next, lam)) = accepted else {
            return Ok(Termination::Converged);
        };
        step = t;
        *l = next;
        *lambda = lam;
        trace.push(lam);
        if lam > opts.cap || min_length(l) < opts.boundary_eps {
            return Ok(Termination::BoundaryDivergence);
        }
    }
    Ok(Termination::MaxIter)
}

/// Projected q-form of the normalized first eigenfunction; zero exactly at
/// extremal lengths when the eigenvalue is simple.
fn stationarity(g: &Graph, l: &LengthFunction) -> Result<Option<(Vec<f64>, f64)>> {
    let state = clustered_state(g, l, 1e-6)?;
    if state.multiplicity() != 1 {
        return Ok(None);
    }
    let q = q_form(g, state.basis.function(0), l, state.lambda1())?;
    let mean = q.iter().sum::<f64>() / q.len() as f64;
    Ok(Some((q.iter().map(|x| x - mean).collect(), state.lambda1())))
}

/// One Newton step on the stationarity system, with a finite-difference
/// Jacobian. Accepted only if it reduces the residual without lowering the
/// eigenvalue beyond rounding.
fn newton_step(
    g: &Graph,
    l: &LengthFunction,
    state: &LengthState,
) -> Result<Option<(LengthFunction, f64)>> {
    let e = g.edge_count();
    let Some((f0, _)) = stationarity(g, l)? else {
        return Ok(None);
    };
    let h = 1e-6 * min_length(l);
    let mut jac = DMatrix::zeros(e, e);
    for k in 0..e {
        let dir: Vec<f64> = (0..e)
            .map(|i| if i == k { 1.0 } else { 0.0 } - 1.0 / e as f64)
            .collect();
        let shifted = |s: f64| -> Result<Option<Vec<f64>>> {
            let v: Vec<f64> = l.values().iter().zip(&dir).map(|(x, d)| x + s * d).collect();
            Ok(stationarity(g, &LengthFunction::new(v)?)?.map(|p| p.0))
        };
        let (Some(fp), Some(fm)) = (shifted(h)?, shifted(-h)?) else {
            return Ok(None);
        };
        for i in 0..e {
            jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let rhs = -DVector::from_vec(f0.clone());
    let eps = 1e-12 * jac.amax();
    let Ok(coef) = jac.svd(true, true).solve(&rhs, eps) else {
        return Ok(None);
    };
    let mut delta = vec![0.0; e];
    for k in 0..e {
        for (i, d) in delta.iter_mut().enumerate() {
            *d += coef[k] * (if i == k { 1.0 } else { 0.0 } - 1.0 / e as f64);
        }
    }
    let mut scale = 1.0f64;
    for (x, d) in l.values().iter().zip(&delta) {
        if *d < 0.0 {
            scale = scale.min(-0.5 * x / d);
        }
    }
    let trial: Vec<f64> = l
        .values()
        .iter()
        .zip(&delta)
        .map(|(x, d)| x + scale * d)
        .collect();
    let Ok(trial) = LengthFunction::new(trial).and_then(|t| normalize_lengths(&t)) else {
        return Ok(None);
    };
    let Some((f1, lam)) = stationarity(g, &trial)? else {
        return Ok(None);
    };
    if lam >= state.lambda1() * (1.0 - 1e-12) && norm(&f1) < norm(&f0) {
        Ok(Some((trial, lam)))
    } else {
        Ok(None)
    }
}

fn finish(
    g: &Graph,
    l: LengthFunction,
    lambda: f64,
    trace: Vec<f64>,
    iterations: usize,
    termination: Termination,
    opts: &LengthOptions,
) -> Result<OptResult<LengthFunction>> {
    let mut result = OptResult {
        params: l.clone(),
        lambda1: lambda,
        multiplicity: 0,
        trace,
        iterations,
        termination,
        extremality: None,
        feasibility: None,
        certificate: None,
        dual: None,
        degenerate_weights: false,
    };
    let state = match clustered_state(g, &l, DEFAULT_MULT_TOL) {
        Ok(s) => s,
        Err(_) if termination == Termination::BoundaryDivergence => {
            result.multiplicity = 1;
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    result.lambda1 = state.lambda1();
    result.multiplicity = state.multiplicity();
    if termination == Termination::BoundaryDivergence {
        return Ok(result);
    }
    result.extremality = Some(extremality_check_sampled(
        &state,
        opts.direction_samples,
        opts.seed,
    )?);
    let forms = edge_form_matrices(g, &state.basis, &l, FormMode::Problem1)?;
    let targets = mode_targets(&l, FormMode::Problem1);
    let feas = solve_cone_feasibility(&forms, &targets, &opts.feasibility)?;
    if feas.report.status == FeasibilityStatus::Feasible {
        result.certificate = Some(build_embedding(
            &feas.gram,
            &state.basis,
            g,
            &l,
            FormMode::Problem1,
            1.0,
        )?);
    }
    result.feasibility = Some(feas.report);
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p3_reaches_quarter() {
        let g = Graph::path(3).unwrap();
        let r = maximize_lengths(&g, &LengthFunction::uniform(2), &Default::default()).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!((r.lambda1 - 16.0).abs() < 1e-8);
        assert!(r.params.values().iter().all(|x| (x - 0.25).abs() < 1e-6));
    }

    #[test]
    fn p4_optimum() {
        let g = Graph::path(4).unwrap();
        let r = maximize_lengths(&g, &LengthFunction::uniform(3), &Default::default()).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!((r.lambda1 - 18.669392661).abs() < 1e-7, "{}", r.lambda1);
        let v = r.params.values();
        assert!((v[0] - 0.19049705).abs() < 1e-6 && (v[2] - v[0]).abs() < 1e-8);
        assert!(r.extremality.as_ref().unwrap().pass);
        assert_eq!(r.feasibility.as_ref().unwrap().status, FeasibilityStatus::Feasible);
    }

    #[test]
    fn p4_from_skewed_start_without_polish() {
        let g = Graph::path(4).unwrap();
        let init = LengthFunction::new(vec![0.1, 0.25, 0.15]).unwrap();
        let opts = LengthOptions {
            skip_polish: true,
            ..Default::default()
        };
        let r = maximize_lengths(&g, &init, &opts).unwrap();
        assert!((r.lambda1 - 18.669392661).abs() < 1e-7, "{}", r.lambda1);
    }

    #[test]
    fn c3_uniform_stays() {
        let g = Graph::cycle(3).unwrap();
        let r = maximize_lengths(&g, &LengthFunction::uniform(3), &Default::default()).unwrap();
        assert!((r.lambda1 - 54.0).abs() < 1e-6);
        assert_eq!(r.multiplicity, 2);
        assert!(r.params.values().iter().all(|x| (x - 1.0 / 6.0).abs() < 1e-6));
        assert!(r.certificate.is_some());
    }

    #[test]
    fn rejects_unnormalized_init() {
        let g = Graph::path(3).unwrap();
        let init = LengthFunction::new(vec![0.3, 0.3]).unwrap();
        assert!(matches!(
            maximize_lengths(&g, &init, &Default::default()),
            Err(Error::InvalidInit(_))
        ));
    }

    #[test]
    fn triangle_plus_pendant_diverges() {
        // K_{1,3} with an extra edge between two leaves
        let g = Graph::from_one_based(4, [(1, 2), (1, 3), (1, 4), (2, 3)]).unwrap();
        let r = maximize_lengths(&g, &LengthFunction::uniform(4), &Default::default()).unwrap();
        assert_eq!(r.termination, Termination::BoundaryDivergence);
        assert!(r.lambda1 > 1000.0);
    }
}
