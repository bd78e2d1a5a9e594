//! Limited-memory BFGS minimizer with Armijo backtracking. Internal to the
//! text classifier; the objective there is smooth and convex, which keeps
//! this simple implementation well inside its comfort zone.

pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimizes `f`, returning once the gradient infinity norm drops to `tol`
/// or `max_iter` iterations elapse.
#[cfg_attr(not(test), allow(dead_code))]
pub fn minimize(
    f: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> LbfgsOutcome {
    minimize_preconditioned(f, x0, tol, max_iter, None)
}

/// [`minimize`] with a diagonal initial inverse Hessian. Callers that know
/// the curvature structure (a strong ridge on part of the parameters, say)
/// pass the inverse diagonal to keep stiff problems well scaled.
pub fn minimize_preconditioned(
    mut f: impl FnMut(&[f64]) -> (f64, Vec<f64>),
    x0: Vec<f64>,
    tol: f64,
    max_iter: usize,
    inv_diag: Option<&[f64]>,
) -> LbfgsOutcome {
    const MEMORY: usize = 10;
    let n = x0.len();
    if let Some(d) = inv_diag {
        assert_eq!(d.len(), n);
        assert!(d.iter().all(|v| *v > 0.0));
    }
    let mut x = x0;
    let (mut value, mut grad) = f(&x);
    let mut s_list: Vec<Vec<f64>> = Vec::new();
    let mut y_list: Vec<Vec<f64>> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();

    let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut iterations = 0;
    let mut converged = inf_norm(&grad) <= tol;

    while !converged && iterations < max_iter {
        iterations += 1;

        // Two-loop recursion for the search direction.
        let mut q = grad.clone();
        let m = s_list.len();
        let mut alpha = vec![0.0; m];
        for i in (0..m).rev() {
            alpha[i] = rho[i] * dot(&s_list[i], &q);
            for (qj, yj) in q.iter_mut().zip(&y_list[i]) {
                *qj -= alpha[i] * yj;
            }
        }
        // Initial inverse Hessian: the caller's diagonal when given,
        // rescaled by the usual gamma from the newest pair.
        let gamma = if m > 0 {
            let last = m - 1;
            let ydy = match inv_diag {
                Some(d) => y_list[last]
                    .iter()
                    .zip(d)
                    .map(|(y, di)| y * y * di)
                    .sum::<f64>(),
                None => dot(&y_list[last], &y_list[last]),
            };
            dot(&s_list[last], &y_list[last]) / ydy
        } else {
            1.0
        };
        match inv_diag {
            Some(d) => {
                for (qj, di) in q.iter_mut().zip(d) {
                    *qj *= gamma * di;
                }
            }
            None => {
                for qj in &mut q {
                    *qj *= gamma;
                }
            }
        }
        for i in 0..m {
            let beta = rho[i] * dot(&y_list[i], &q);
            for (qj, sj) in q.iter_mut().zip(&s_list[i]) {
                *qj += (alpha[i] - beta) * sj;
            }
        }
        let direction: Vec<f64> = q.iter().map(|v| -v).collect();

        let slope = dot(&grad, &direction);
        // A non-descent direction means the curvature pairs went stale;
        // fall back to steepest descent.
        let (direction, slope) = if slope < 0.0 {
            (direction, slope)
        } else {
            let d: Vec<f64> = grad.iter().map(|g| -g).collect();
            let s = -dot(&grad, &grad);
            (d, s)
        };

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = x
                .iter()
                .zip(&direction)
                .map(|(xi, di)| xi + step * di)
                .collect();
            let (cand_value, cand_grad) = f(&candidate);
            if cand_value <= value + 1e-4 * step * slope {
                let s: Vec<f64> = candidate.iter().zip(&x).map(|(a, b)| a - b).collect();
                let y: Vec<f64> = cand_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
                let sy = dot(&s, &y);
                if sy > 1e-12 {
                    if s_list.len() == MEMORY {
                        s_list.remove(0);
                        y_list.remove(0);
                        rho.remove(0);
                    }
                    rho.push(1.0 / sy);
                    s_list.push(s);
                    y_list.push(y);
                }
                x = candidate;
                value = cand_value;
                grad = cand_grad;
                accepted = true;
                break;
            }
            // Backtrack to the minimizer of the quadratic through
            // (0, value), slope, and (step, cand_value), kept inside
            // [0.1, 0.5] of the current step.
            let denom = 2.0 * (cand_value - value - slope * step);
            let quad = if denom > 0.0 {
                -slope * step * step / denom
            } else {
                0.5 * step
            };
            step = quad.clamp(0.1 * step, 0.5 * step);
        }
        if !accepted {
            break;
        }
        converged = inf_norm(&grad) <= tol;
    }

    debug_assert_eq!(x.len(), n);
    LbfgsOutcome {
        grad_norm: inf_norm(&grad),
        x,
        value,
        iterations,
        converged,
    }
}
