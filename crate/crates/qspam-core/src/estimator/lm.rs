//! Small dense Levenberg-Marquardt minimizer with box constraints and a
//! forward-difference Jacobian. Problem sizes here are tiny (at most 8
//! residuals, 7 parameters), so simplicity wins over sparsity.

use nalgebra::{DMatrix, DVector};

/// Least-squares problem: `residual` fills `out` with the (already
/// weighted) residual vector at `x`. Parameters are kept inside
/// `[lower, upper]` by projection.
pub struct LmProblem<'a> {
    pub residual: &'a dyn Fn(&[f64], &mut [f64]),
    pub n_residuals: usize,
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub x: Vec<f64>,
    /// Sum of squared residuals at the solution.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Forward-difference Jacobian of the weighted residuals at the
    /// solution, for covariance estimation.
    pub jacobian: DMatrix<f64>,
}

pub const MAX_ITERATIONS: usize = 500;
const STEP_TOL: f64 = 1e-10;
const COST_TOL: f64 = 1e-12;

fn project(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn eval_cost(problem: &LmProblem, x: &[f64], buf: &mut [f64]) -> f64 {
    (problem.residual)(x, buf);
    buf.iter().map(|r| r * r).sum()
}

fn jacobian(problem: &LmProblem, x: &[f64], r0: &[f64]) -> DMatrix<f64> {
    let (m, n) = (problem.n_residuals, x.len());
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let mut rp = vec![0.0; m];
    for j in 0..n {
        let mut h = 1e-7 * (1.0 + x[j].abs());
        // step inward when the forward step would leave the box
        if x[j] + h > problem.upper[j] {
            h = -h;
        }
        xp[j] = x[j] + h;
        (problem.residual)(&xp, &mut rp);
        for i in 0..m {
            jac[(i, j)] = (rp[i] - r0[i]) / h;
        }
        xp[j] = x[j];
    }
    jac
}

pub fn levenberg_marquardt(problem: &LmProblem, x0: &[f64]) -> LmResult {
    let n = x0.len();
    let m = problem.n_residuals;
    let mut x = x0.to_vec();
    project(&mut x, problem.lower, problem.upper);
    let mut r = vec![0.0; m];
    let mut cost = eval_cost(problem, &x, &mut r);
    let mut lambda = 1e-3;
    let mut jac = jacobian(problem, &x, &r);
    let mut converged = false;
    let mut iterations = 0;

    for it in 0..MAX_ITERATIONS {
        iterations = it + 1;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * DVector::from_column_slice(&r);
        let mut damped = jtj.clone();
        for d in 0..n {
            damped[(d, d)] += lambda * (jtj[(d, d)].max(1e-12));
        }
        let Some(step) = damped.lu().solve(&(-&jtr)) else {
            lambda *= 10.0;
            continue;
        };
        let mut x_trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, s)| a + s).collect();
        project(&mut x_trial, problem.lower, problem.upper);
        let mut r_trial = vec![0.0; m];
        let cost_trial = eval_cost(problem, &x_trial, &mut r_trial);
        if cost_trial < cost {
            let step_norm: f64 = x_trial
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            let x_norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let small_step = step_norm < STEP_TOL * (1.0 + x_norm);
            let small_gain = cost - cost_trial < COST_TOL * (1.0 + cost);
            x = x_trial;
            r = r_trial;
            cost = cost_trial;
            jac = jacobian(problem, &x, &r);
            lambda = (lambda * 0.3).max(1e-12);
            if small_step || small_gain {
                converged = true;
                break;
            }
        } else {
            lambda *= 2.0;
            if lambda > 1e12 {
                converged = true; // stuck at a (possibly constrained) minimum
                break;
            }
        }
    }
    LmResult { x, cost, iterations, converged, jacobian: jac }
}

/// Covariance of the fitted parameters, (J^T J)^-1 for weighted residuals.
pub fn covariance_from_jacobian(jac: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    (jac.transpose() * jac).try_inverse()
}
