//! Plain Nelder–Mead minimizer with the standard coefficients.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    pub max_evals: usize,
    /// Stop when the spread of simplex values is below `f_tol * (1 + |f_best|)`
    /// and every vertex is within `x_tol` of the best one.
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.1,
            max_evals: 20_000,
            f_tol: 1e-14,
            x_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    /// Best value after each iteration.
    pub trace: Vec<f64>,
    pub converged: bool,
    /// Set when `f` asked to stop.
    pub aborted: bool,
}

/// What the objective returns: a value, or a request to stop with the
/// current point recorded.
pub enum Eval {
    Value(f64),
    Stop(f64),
}

/// Minimizes `f` from `x0`. The best vertex is never worse than `x0`.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> Eval,
{
    let n = x0.len();
    let mut evals = 0;
    let mut trace = Vec::new();
    let mut stop = false;
    let mut eval = |x: &[f64], evals: &mut usize, stop: &mut bool| -> f64 {
        *evals += 1;
        match f(x) {
            Eval::Value(v) => v,
            Eval::Stop(v) => {
                *stop = true;
                v
            }
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let v0 = eval(x0, &mut evals, &mut stop);
    simplex.push((x0.to_vec(), v0));
    for i in 0..n {
        if stop {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let v = eval(&x, &mut evals, &mut stop);
        simplex.push((x, v));
    }
    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.total_cmp(&b.1);
    simplex.sort_by(by_value);
    if n == 0 || stop {
        let (x, value) = simplex.swap_remove(0);
        return NelderMeadResult {
            x,
            value,
            evals,
            trace,
            converged: n == 0,
            aborted: stop,
        };
    }

    let mut converged = false;
    while evals < opts.max_evals && !stop {
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= opts.f_tol * (1.0 + best.abs()) && size <= opts.x_tol {
            converged = true;
            break;
        }
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = eval(&xr, &mut evals, &mut stop);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evals, &mut stop);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let xc = along(0.5);
                let fc = eval(&xc, &mut evals, &mut stop);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc, &mut evals, &mut stop);
                (xc, fc)
            };
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for (x, v) in simplex[1..].iter_mut() {
                    if stop {
                        break;
                    }
                    for (xi, bi) in x.iter_mut().zip(&x_best) {
                        *xi = bi + 0.5 * (*xi - bi);
                    }
                    *v = eval(x, &mut evals, &mut stop);
                }
            }
        }
        simplex.sort_by(by_value);
        trace.push(simplex[0].1);
    }
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult {
        x,
        value,
        evals,
        trace,
        converged,
        aborted: stop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| Eval::Value((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let r = minimize(f, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn stops_on_request() {
        let r = minimize(
            |x: &[f64]| if x[0] > 2.0 { Eval::Stop(-x[0]) } else { Eval::Value(-x[0]) },
            &[0.0],
            &NelderMeadOptions::default(),
        );
        assert!(r.aborted);
    }

    #[test]
    fn start_at_minimum_is_kept() {
        let r = minimize(|x: &[f64]| Eval::Value(x[0].abs() + x[1].abs()), &[0.0, 0.0], &Default::default());
        assert_eq!(r.x, vec![0.0, 0.0]);
    }
}
