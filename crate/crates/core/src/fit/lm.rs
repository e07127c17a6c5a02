//! Damped least-squares engine used by the fitting layer.
//!
//! Classic Marquardt schedule: solve `(J^T J + lambda * diag(J^T J)) h = -J^T r`,
//! multiply `lambda` by 10 on a rejected step and divide by 10 on an
//! accepted one.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e12;
const LAMBDA_MIN: f64 = 1e-15;

/// A residual vector with an analytic Jacobian over a small parameter set.
pub(crate) trait ResidualSystem {
    fn params(&self) -> usize;
    fn residual_count(&self) -> usize;
    fn residuals(&self, p: &[f64], out: &mut DVector<f64>);
    fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct LmOptions {
    pub max_iterations: usize,
    pub tol_gradient: f64,
    pub tol_step: f64,
    pub tol_cost: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct LmReport {
    pub params: Vec<f64>,
    pub rss: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Cost after every accepted step, starting with the initial cost.
    /// Consumed by the descent tests.
    #[allow(dead_code)]
    pub trace: Vec<f64>,
}

pub(crate) fn minimize<S: ResidualSystem>(
    system: &S,
    x0: &[f64],
    opts: &LmOptions,
) -> Result<LmReport, Error> {
    let n = system.params();
    let m = system.residual_count();
    debug_assert_eq!(x0.len(), n);

    let mut p = x0.to_vec();
    let mut r = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, n);
    system.residuals(&p, &mut r);
    let mut cost = r.norm_squared();
    let mut lambda = LAMBDA_INIT;
    let mut trace = vec![cost];
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.max_iterations {
        system.jacobian(&p, &mut jac);
        let grad = jac.transpose() * &r;
        let grad_max = grad.amax();
        if grad_max < opts.tol_gradient {
            converged = true;
            break;
        }
        let hess = jac.transpose() * &jac;

        let mut accepted = false;
        while lambda <= LAMBDA_MAX {
            let mut damped = hess.clone();
            for i in 0..n {
                let d = hess[(i, i)].max(1e-12);
                damped[(i, i)] += lambda * d;
            }
            let step = match damped.cholesky() {
                Some(chol) => chol.solve(&(-&grad)),
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(pi, si)| pi + si).collect();
            let mut r_trial = DVector::zeros(m);
            system.residuals(&trial, &mut r_trial);
            let cost_trial = r_trial.norm_squared();
            if cost_trial.is_finite() && cost_trial < cost {
                let cost_drop = (cost - cost_trial) / cost.max(1e-300);
                let step_small = step.norm()
                    < opts.tol_step * (1.0 + p.iter().map(|v| v * v).sum::<f64>().sqrt());
                p = trial;
                r = r_trial;
                cost = cost_trial;
                trace.push(cost);
                lambda = (lambda / 10.0).max(LAMBDA_MIN);
                accepted = true;
                iterations += 1;
                if cost_drop < opts.tol_cost || step_small || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }

        if !accepted {
            // Damping exhausted. At a numerical optimum the gradient is
            // tiny and this is plain convergence; otherwise the normal
            // equations are beyond recovery.
            if grad_max <= 1e3 * opts.tol_gradient || cost == 0.0 {
                converged = true;
                break;
            }
            return Err(Error::NonConvergence {
                iterations,
                rss: cost,
                gradient_norm: grad_max,
            });
        }
        if converged {
            break;
        }
    }

    Ok(LmReport {
        params: p,
        rss: cost,
        iterations,
        converged,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Exponential decay toy problem: r_i = p0 * exp(p1 * x_i) - y_i.
    struct Decay {
        x: Vec<f64>,
        y: Vec<f64>,
    }

    impl ResidualSystem for Decay {
        fn params(&self) -> usize {
            2
        }
        fn residual_count(&self) -> usize {
            self.x.len()
        }
        fn residuals(&self, p: &[f64], out: &mut DVector<f64>) {
            for (i, (&x, &y)) in self.x.iter().zip(&self.y).enumerate() {
                out[i] = p[0] * (p[1] * x).exp() - y;
            }
        }
        fn jacobian(&self, p: &[f64], out: &mut DMatrix<f64>) {
            for (i, &x) in self.x.iter().enumerate() {
                let e = (p[1] * x).exp();
                out[(i, 0)] = e;
                out[(i, 1)] = p[0] * x * e;
            }
        }
    }

    fn opts() -> LmOptions {
        LmOptions {
            max_iterations: 200,
            tol_gradient: 1e-12,
            tol_step: 1e-12,
            tol_cost: 1e-12,
        }
    }

    #[test]
    fn recovers_decay_parameters() {
        let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|&x| 2.5 * (-0.7 * x).exp()).collect();
        let sys = Decay { x, y };
        let rep = minimize(&sys, &[1.0, -0.1], &opts()).unwrap();
        assert!(rep.converged);
        assert!((rep.params[0] - 2.5).abs() < 1e-8);
        assert!((rep.params[1] + 0.7).abs() < 1e-8);
        assert!(rep.rss < 1e-16);
    }

    #[test]
    fn accepted_costs_never_increase() {
        let x: Vec<f64> = (0..30).map(|i| i as f64 * 0.2).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, &x)| 1.8 * (-0.4 * x).exp() + if i % 2 == 0 { 0.01 } else { -0.01 })
            .collect();
        let sys = Decay { x, y };
        let rep = minimize(&sys, &[0.5, -1.5], &opts()).unwrap();
        for w in rep.trace.windows(2) {
            assert!(w[1] <= w[0], "cost increased: {} -> {}", w[0], w[1]);
        }
    }
}
