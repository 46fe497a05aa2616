//! Nelder–Mead simplex search with dimension-adapted coefficients.

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Initial edge length of the simplex along each axis.
    pub step: f64,
    /// Stop once the objective spread over the simplex falls below this.
    pub f_tol: f64,
    /// Stop once the objective itself falls below this.
    pub target: f64,
    pub max_evals: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { step: 0.5, f_tol: 1e-15, target: 0.0, max_evals: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
}

/// Minimize `f` from `x0`.
///
/// Coefficients follow the adaptive choice of Gao & Han, which keeps the
/// method effective in a dozen or more dimensions.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult {
    let n = x0.len();
    let nf = n as f64;
    let (alpha, beta, gamma, delta) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(x0, &mut evals);
    simplex.push((x0.to_vec(), f0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.step;
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best <= opts.target || (worst - best).abs() <= opts.f_tol || evals >= opts.max_evals {
            break;
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / nf;
            }
        }
        let along =
            |t: f64, from: &[f64]| -> Vec<f64> { centroid.iter().zip(from).map(|(c, w)| c + t * (c - w)).collect() };

        let worst_x = simplex[n].0.clone();
        let xr = along(alpha, &worst_x);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(alpha * beta, &worst_x);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let xc = along(alpha * gamma, &worst_x);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-gamma, &worst_x);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best_x = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best_x) {
                *xi = bi + delta * (*xi - bi);
            }
            *fx = eval(x, &mut evals);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    SimplexResult { x, f, evals }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_minimum() {
        let r = nelder_mead(
            |x| (x[0] - 1.0).powi(2) + 10.0 * (x[1] + 2.0).powi(2) + (x[2] - 0.5).powi(2),
            &[0.0, 0.0, 0.0],
            &SimplexOptions::default(),
        );
        assert!(r.f < 1e-12, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] + 2.0).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock() {
        let r = nelder_mead(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &SimplexOptions { step: 0.1, ..Default::default() },
        );
        assert!(r.f < 1e-10, "{r:?}");
    }

    #[test]
    fn respects_evaluation_budget() {
        let mut calls = 0;
        let r = nelder_mead(
            |x| {
                calls += 1;
                x.iter().map(|v| v.cos()).sum()
            },
            &[0.1; 6],
            &SimplexOptions { max_evals: 50, ..Default::default() },
        );
        assert!(r.evals <= 50 + 7);
        assert_eq!(r.evals, calls);
    }
}
