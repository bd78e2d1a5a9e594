//! Cox proportional-hazards regression.
//!
//! The model leaves the baseline hazard unspecified and maximizes the
//! partial likelihood, with tied event times handled by the Breslow
//! approximation: all events at a time share that time's risk-set
//! denominator. Optimization is damped Newton with step halving; standard
//! errors come from the inverse observed information, and Wald p-values
//! are two-sided normal.

use crate::error::{Error, Result};
use crate::linalg;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy)]
pub struct CoxOptions {
    /// Convergence tolerance on the gradient infinity norm.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CoxOptions {
    fn default() -> Self {
        CoxOptions {
            tol: 1e-8,
            max_iter: 100,
        }
    }
}

/// Point estimate for one covariate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoxEstimate {
    pub beta: f64,
    pub se: f64,
    pub z: f64,
    pub p: f64,
}

/// A fitted model. `estimates[k]` is `None` when covariate `k` was not
/// identifiable (zero variance, or complete separation detected by the
/// coefficient running past 50 in magnitude); `diagnostics[k]` says why.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoxFit {
    pub covariates: Vec<String>,
    pub estimates: Vec<Option<CoxEstimate>>,
    pub diagnostics: Vec<Option<String>>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl CoxFit {
    pub fn estimate(&self, name: &str) -> Option<&CoxEstimate> {
        let idx = self.covariates.iter().position(|c| c == name)?;
        self.estimates[idx].as_ref()
    }
}

/// A right-censored sample with a dense covariate matrix, ready to fit.
#[derive(Debug, Clone)]
pub struct CoxProblem {
    durations: Vec<f64>,
    events: Vec<bool>,
    /// Row-major, one row of length `n_covariates` per subject.
    design: Vec<f64>,
    names: Vec<String>,
    /// Subject indices ordered by duration descending.
    order: Vec<usize>,
}

impl CoxProblem {
    pub fn new(
        durations: Vec<f64>,
        events: Vec<bool>,
        design_rows: Vec<Vec<f64>>,
        names: Vec<String>,
    ) -> Result<CoxProblem> {
        let n = durations.len();
        let p = names.len();
        if events.len() != n || design_rows.len() != n {
            return Err(Error::invalid("durations, events, and design rows must align"));
        }
        if n == 0 {
            return Err(Error::invalid("no observations"));
        }
        if durations.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(Error::invalid("durations must be positive and finite"));
        }
        if !events.iter().any(|e| *e) {
            return Err(Error::invalid("no events observed; nothing to regress on"));
        }
        let mut design = Vec::with_capacity(n * p);
        for row in &design_rows {
            if row.len() != p {
                return Err(Error::invalid("design row width does not match covariate names"));
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("covariates must be finite"));
            }
            design.extend_from_slice(row);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            durations[b]
                .partial_cmp(&durations[a])
                .expect("durations are finite")
        });
        Ok(CoxProblem {
            durations,
            events,
            design,
            names,
            order,
        })
    }

    pub fn n_subjects(&self) -> usize {
        self.durations.len()
    }

    pub fn n_covariates(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    #[inline]
    fn covariate(&self, subject: usize, k: usize) -> f64 {
        self.design[subject * self.names.len() + k]
    }

    /// Breslow partial log-likelihood at `beta`.
    pub fn log_likelihood(&self, beta: &[f64]) -> f64 {
        self.pass(beta, false).0
    }

    /// Gradient of the partial log-likelihood at `beta`.
    pub fn gradient(&self, beta: &[f64]) -> Vec<f64> {
        self.pass(beta, false).1
    }

    /// Observed information (negative Hessian) at `beta`, row-major p x p.
    pub fn information(&self, beta: &[f64]) -> Vec<f64> {
        self.pass(beta, true).2
    }

    /// One sweep over the risk sets, accumulating the log-likelihood,
    /// gradient, and (optionally) observed information.
    ///
    /// Subjects are visited in descending duration order so the risk set at
    /// each event time is a running cumulative sum. Linear predictors are
    /// shifted by their maximum before exponentiation.
    fn pass(&self, beta: &[f64], want_info: bool) -> (f64, Vec<f64>, Vec<f64>) {
        let p = self.names.len();
        assert_eq!(beta.len(), p);
        let n = self.durations.len();

        let mut eta = vec![0.0; n];
        let mut max_eta = f64::NEG_INFINITY;
        for i in 0..n {
            let mut acc = 0.0;
            for k in 0..p {
                acc += beta[k] * self.covariate(i, k);
            }
            eta[i] = acc;
            max_eta = max_eta.max(acc);
        }

        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = vec![0.0; p * p];
        let mut ll = 0.0;
        let mut grad = vec![0.0; p];
        let mut info = vec![0.0; p * p];

        let mut pos = 0;
        while pos < n {
            // One group of tied durations enters the risk set together.
            let t = self.durations[self.order[pos]];
            let mut end = pos;
            while end < n && self.durations[self.order[end]] == t {
                let i = self.order[end];
                let w = (eta[i] - max_eta).exp();
                s0 += w;
                for k in 0..p {
                    let xk = self.covariate(i, k);
                    s1[k] += w * xk;
                    if want_info {
                        for l in 0..=k {
                            s2[k * p + l] += w * xk * self.covariate(i, l);
                        }
                    }
                }
                end += 1;
            }

            let mut deaths = 0usize;
            for &i in &self.order[pos..end] {
                if self.events[i] {
                    deaths += 1;
                    ll += eta[i] - max_eta;
                    for k in 0..p {
                        grad[k] += self.covariate(i, k);
                    }
                }
            }
            if deaths > 0 {
                let d = deaths as f64;
                ll -= d * s0.ln();
                for k in 0..p {
                    grad[k] -= d * s1[k] / s0;
                }
                if want_info {
                    for k in 0..p {
                        for l in 0..=k {
                            let v = d * (s2[k * p + l] / s0 - (s1[k] / s0) * (s1[l] / s0));
                            info[k * p + l] += v;
                            if k != l {
                                info[l * p + k] += v;
                            }
                        }
                    }
                }
            }
            pos = end;
        }
        (ll, grad, info)
    }

    /// Fits the model. Covariates without variance are excluded up front
    /// and reported absent; a coefficient escaping past |50| is treated as
    /// complete separation, excluded, and the rest refit.
    pub fn fit(&self, opts: CoxOptions) -> Result<CoxFit> {
        let p = self.names.len();
        let mut excluded: Vec<Option<String>> = vec![None; p];

        for k in 0..p {
            let first = self.covariate(0, k);
            if (0..self.n_subjects()).all(|i| self.covariate(i, k) == first) {
                excluded[k] =
                    Some("constant covariate; coefficient not identifiable".to_string());
            }
        }

        loop {
            let active: Vec<usize> = (0..p).filter(|k| excluded[*k].is_none()).collect();
            let sub = self.subproblem(&active)?;
            let outcome = sub.newton(opts);

            if let Some(runaway) = outcome.separated {
                let k = active[runaway];
                excluded[k] = Some(
                    "coefficient diverged past |50|; complete separation suspected".to_string(),
                );
                continue;
            }

            let mut estimates = vec![None; p];
            for (j, &k) in active.iter().enumerate() {
                estimates[k] = outcome.estimates[j];
            }
            return Ok(CoxFit {
                covariates: self.names.clone(),
                estimates,
                diagnostics: excluded,
                log_likelihood: outcome.log_likelihood,
                iterations: outcome.iterations,
                converged: outcome.converged,
            });
        }
    }

    fn subproblem(&self, active: &[usize]) -> Result<CoxProblem> {
        let n = self.n_subjects();
        let p = self.names.len();
        if active.len() == p {
            return Ok(self.clone());
        }
        let mut design = Vec::with_capacity(n * active.len());
        for i in 0..n {
            for &k in active {
                design.push(self.covariate(i, k));
            }
        }
        Ok(CoxProblem {
            durations: self.durations.clone(),
            events: self.events.clone(),
            design,
            names: active.iter().map(|&k| self.names[k].clone()).collect(),
            order: self.order.clone(),
        })
    }

    fn newton(&self, opts: CoxOptions) -> NewtonOutcome {
        let p = self.names.len();
        let mut beta = vec![0.0; p];
        let mut ll = self.log_likelihood(&beta);
        let mut iterations = 0;
        let mut converged = false;

        if p == 0 {
            return NewtonOutcome {
                estimates: vec![],
                log_likelihood: ll,
                iterations,
                converged: true,
                separated: None,
            };
        }

        while iterations < opts.max_iter {
            iterations += 1;
            let (_, grad, mut info) = self.pass(&beta, true);

            let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if grad_norm <= opts.tol {
                converged = true;
                break;
            }

            let step = match linalg::solve(&info, &grad, p) {
                Some(s) => s,
                None => {
                    // Ridge the information matrix just enough to step;
                    // if it stays singular, take a bare gradient step.
                    for k in 0..p {
                        info[k * p + k] += 1e-8 + 1e-6 * info[k * p + k].abs();
                    }
                    linalg::solve(&info, &grad, p).unwrap_or_else(|| grad.clone())
                }
            };

            // Damped update: halve until the likelihood does not decrease.
            let mut scale = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let candidate: Vec<f64> = beta
                    .iter()
                    .zip(&step)
                    .map(|(b, s)| b + scale * s)
                    .collect();
                let cand_ll = self.log_likelihood(&candidate);
                if cand_ll >= ll - 1e-13 {
                    beta = candidate;
                    ll = cand_ll;
                    accepted = true;
                    break;
                }
                scale *= 0.5;
            }
            if !accepted {
                break;
            }

            if let Some(k) = beta.iter().position(|b| b.abs() > 50.0) {
                return NewtonOutcome {
                    estimates: vec![],
                    log_likelihood: ll,
                    iterations,
                    converged: false,
                    separated: Some(k),
                };
            }
        }

        let info = self.information(&beta);
        let cov = linalg::invert(&info, p);
        let estimates = (0..p)
            .map(|k| {
                let se = cov
                    .as_ref()
                    .map(|c| c[k * p + k].max(0.0).sqrt())
                    .unwrap_or(f64::NAN);
                let z = if se > 0.0 { beta[k] / se } else { f64::NAN };
                Some(CoxEstimate {
                    beta: beta[k],
                    se,
                    z,
                    p: if z.is_finite() {
                        linalg::two_sided_p(z)
                    } else {
                        f64::NAN
                    },
                })
            })
            .collect();

        NewtonOutcome {
            estimates,
            log_likelihood: ll,
            iterations,
            converged,
            separated: None,
        }
    }
}

struct NewtonOutcome {
    estimates: Vec<Option<CoxEstimate>>,
    log_likelihood: f64,
    iterations: usize,
    converged: bool,
    separated: Option<usize>,
}
