#![allow(dead_code)]

use lapmax::graph::{Graph, LengthFunction};
use lapmax::perturbation::{EdgeQuadraticForm, FormMode};
use nalgebra::DMatrix;
use rand::Rng;

/// Random connected graph on `n` vertices: a random tree plus each other
/// pair with probability `p`.
pub fn random_connected_graph<R: Rng>(rng: &mut R, n: usize, p: f64) -> Graph {
    let mut pairs = Vec::new();
    for v in 1..n {
        pairs.push((rng.random_range(0..v), v));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !pairs.contains(&(u, v)) && rng.random_bool(p) {
                pairs.push((u, v));
            }
        }
    }
    Graph::new(n, pairs).unwrap()
}

pub fn random_lengths<R: Rng>(rng: &mut R, edges: usize) -> LengthFunction {
    let raw: Vec<f64> = (0..edges).map(|_| rng.random_range(0.2..1.0)).collect();
    lapmax::graph::normalize_lengths(&LengthFunction::new(raw).unwrap()).unwrap()
}

/// Smallest relative residual `max_e |tr(Q_e X) - t_e| / t_e` over PSD `X`,
/// by exhaustive search. `mu = 1` is solved exactly. For `mu = 2`,
/// `X = [[a, b], [b, c]]` with `a, c` on a grid of step `1e-3 T` over
/// `[0, T]`, where `T` bounds the trace of any solution, and `b` minimized
/// exactly over `[-sqrt(ac), sqrt(ac)]`.
pub fn brute_force_cone_residual(forms: &EdgeQuadraticForm, targets: &[f64]) -> f64 {
    match forms.dim() {
        1 => {
            let lines: Vec<(f64, f64)> = forms
                .matrices
                .iter()
                .zip(targets)
                .map(|(q, t)| (q[(0, 0)] / t, -1.0))
                .collect();
            min_max_abs(&lines, 0.0, f64::INFINITY)
        }
        2 => {
            let sum = forms.adjoint(&vec![1.0; targets.len()]);
            let (s11, s12, s22) = (sum[(0, 0)], sum[(0, 1)], sum[(1, 1)]);
            let lmin = 0.5 * (s11 + s22) - (0.25 * (s11 - s22).powi(2) + s12 * s12).sqrt();
            // residual r means tr(Q_e X) <= (1 + r) t_e; allow r up to 1
            let bound = 2.0 * targets.iter().sum::<f64>() / lmin;
            let steps = 1000;
            let h = bound / steps as f64;
            let mut best = f64::INFINITY;
            for i in 0..=steps {
                let a = i as f64 * h;
                for j in 0..=steps {
                    let c = j as f64 * h;
                    let rb = (a * c).sqrt();
                    let lines: Vec<(f64, f64)> = forms
                        .matrices
                        .iter()
                        .zip(targets)
                        .map(|(q, t)| {
                            (
                                2.0 * q[(0, 1)] / t,
                                (q[(0, 0)] * a + q[(1, 1)] * c) / t - 1.0,
                            )
                        })
                        .collect();
                    best = best.min(min_max_abs(&lines, -rb, rb));
                }
            }
            best
        }
        _ => panic!("oracle handles mu <= 2"),
    }
}

/// `min_{x in [lo, hi]} max_k |s_k x + c_k|`: convex piecewise linear, so
/// the minimum sits at an endpoint, a zero, or a crossing of two lines.
fn min_max_abs(lines: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let f = |x: f64| lines.iter().map(|(s, c)| (s * x + c).abs()).fold(0.0, f64::max);
    let mut cands = vec![lo];
    if hi.is_finite() {
        cands.push(hi);
    }
    let signed: Vec<(f64, f64)> = lines
        .iter()
        .flat_map(|&(s, c)| [(s, c), (-s, -c)])
        .collect();
    for (i, &(s1, c1)) in signed.iter().enumerate() {
        if s1 != 0.0 {
            cands.push(-c1 / s1);
        }
        for &(s2, c2) in &signed[i + 1..] {
            if s1 != s2 {
                cands.push((c2 - c1) / (s1 - s2));
            }
        }
    }
    cands
        .into_iter()
        .filter(|x| *x >= lo && *x <= hi)
        .map(f)
        .fold(f64::INFINITY, f64::min)
}

/// Random PSD forms `G G^T + 0.05 I`.
pub fn random_forms<R: Rng>(rng: &mut R, mu: usize, edges: usize) -> EdgeQuadraticForm {
    let matrices = (0..edges)
        .map(|_| {
            let g = DMatrix::from_fn(mu, mu, |_, _| rng.random_range(-1.0..1.0));
            &g * g.transpose() + DMatrix::identity(mu, mu) * 0.05
        })
        .collect();
    EdgeQuadraticForm {
        mode: FormMode::Problem1,
        matrices,
    }
}
