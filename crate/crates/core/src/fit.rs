//! Damped least squares (Levenberg-Marquardt) for small scalar models with
//! analytic Jacobians.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub trait Model {
    fn n_params(&self) -> usize;
    fn value(&self, x: f64, p: &[f64]) -> f64;
    /// Writes d value / d p into `grad`.
    fn gradient(&self, x: f64, p: &[f64], grad: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Relative parameter step at which iteration stops.
    pub xtol: f64,
    pub initial_lambda: f64,
    /// Scale the covariance by the reduced chi-square (use when sigmas are
    /// unknown or only relative).
    pub scale_covariance: bool,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 500,
            xtol: 1e-14,
            initial_lambda: 1e-3,
            scale_covariance: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmFit {
    pub params: Vec<f64>,
    /// Infinite diagonal entries mark parameters the data do not constrain.
    pub covariance: DMatrix<f64>,
    pub chi2: f64,
    pub iterations: usize,
}

impl LmFit {
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[(i, i)].sqrt()
    }

    pub fn identifiable(&self, i: usize) -> bool {
        self.covariance[(i, i)].is_finite()
    }
}

struct Linearization {
    jtj: DMatrix<f64>,
    jtr: DVector<f64>,
    chi2: f64,
}

fn linearize<M: Model>(model: &M, xs: &[f64], ys: &[f64], w: &[f64], p: &[f64]) -> Linearization {
    let n = model.n_params();
    let mut jtj = DMatrix::zeros(n, n);
    let mut jtr = DVector::zeros(n);
    let mut grad = vec![0.0; n];
    let mut chi2 = 0.0;
    for ((&x, &y), &wi) in xs.iter().zip(ys).zip(w) {
        let r = (y - model.value(x, p)) * wi;
        model.gradient(x, p, &mut grad);
        for a in 0..n {
            let ja = grad[a] * wi;
            jtr[a] += ja * r;
            for b in 0..n {
                jtj[(a, b)] += ja * grad[b] * wi;
            }
        }
        chi2 += r * r;
    }
    Linearization { jtj, jtr, chi2 }
}

fn chi2<M: Model>(model: &M, xs: &[f64], ys: &[f64], w: &[f64], p: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .zip(w)
        .map(|((&x, &y), &wi)| {
            let r = (y - model.value(x, p)) * wi;
            r * r
        })
        .sum()
}

/// Fits `model` to (xs, ys) with optional per-point standard deviations.
pub fn levenberg_marquardt<M: Model>(
    model: &M,
    xs: &[f64],
    ys: &[f64],
    sigmas: Option<&[f64]>,
    p0: &[f64],
    opts: LmOptions,
) -> Result<LmFit> {
    let n = model.n_params();
    if p0.len() != n || xs.len() != ys.len() {
        return Err(Error::Fit("parameter or data length mismatch".into()));
    }
    if xs.len() < n {
        return Err(Error::Fit(format!(
            "{} samples cannot constrain {n} parameters",
            xs.len()
        )));
    }
    let weights: Vec<f64> = match sigmas {
        Some(s) if s.len() != xs.len() => {
            return Err(Error::Fit("sigma length mismatch".into()));
        }
        Some(s) if s.iter().any(|&v| !(v > 0.0 && v.is_finite())) => {
            return Err(Error::Fit("sigmas must be positive and finite".into()));
        }
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; xs.len()],
    };

    let mut p = p0.to_vec();
    let mut lambda = opts.initial_lambda;
    let mut lin = linearize(model, xs, ys, &weights, &p);
    if !lin.chi2.is_finite() {
        return Err(Error::Fit(
            "non-finite residuals at the initial guess".into(),
        ));
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        iterations += 1;
        if lin.chi2 == 0.0 || lin.jtr.amax() == 0.0 {
            converged = true;
            break;
        }
        let diag_floor = 1e-12 * lin.jtj.diagonal().amax().max(f64::MIN_POSITIVE);
        let mut damped = lin.jtj.clone();
        for a in 0..n {
            damped[(a, a)] += lambda * lin.jtj[(a, a)].max(diag_floor);
        }
        let Some(step) = damped.lu().solve(&lin.jtr) else {
            lambda *= 10.0;
            continue;
        };
        let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let trial_chi2 = chi2(model, xs, ys, &weights, &trial);
        if trial_chi2.is_finite() && trial_chi2 <= lin.chi2 {
            let small = p
                .iter()
                .zip(step.iter())
                .all(|(a, b)| b.abs() <= opts.xtol * (a.abs() + opts.xtol));
            let stalled = trial_chi2 >= lin.chi2 * (1.0 - 1e-15);
            p = trial;
            lin = linearize(model, xs, ys, &weights, &p);
            lambda = (lambda / 10.0).max(1e-15);
            if small || (stalled && lambda <= 1e-12) {
                converged = true;
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e16 {
                // no descent direction left: at the minimum to machine precision
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(Error::Fit(format!(
            "no convergence after {iterations} iterations (chi2 = {:.6e}, lambda = {lambda:.1e}, params = {p:?})",
            lin.chi2
        )));
    }

    let mut covariance = pseudo_inverse_covariance(&lin.jtj);
    if opts.scale_covariance {
        let dof = xs.len().saturating_sub(n).max(1) as f64;
        covariance *= lin.chi2 / dof;
    }
    Ok(LmFit {
        params: p,
        covariance,
        chi2: lin.chi2,
        iterations,
    })
}

/// (J^T W J)^-1, with parameters along numerically null directions given
/// infinite variance.
fn pseudo_inverse_covariance(jtj: &DMatrix<f64>) -> DMatrix<f64> {
    let n = jtj.nrows();
    // normalize so that badly scaled but identifiable parameters are not
    // mistaken for null directions
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let v = jtj[(i, i)];
            if v > 0.0 {
                1.0 / v.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    let scaled = DMatrix::from_fn(n, n, |i, j| jtj[(i, j)] * d[i] * d[j]);
    let svd = scaled.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(f64::MIN_POSITIVE);
    let mut inv = DMatrix::zeros(n, n);
    let mut unconstrained = vec![false; n];
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol {
            inv += vt.row(k).transpose() * u.column(k).transpose() / s;
        } else {
            for j in 0..n {
                if vt[(k, j)].abs() > 1e-6 {
                    unconstrained[j] = true;
                }
            }
        }
    }
    for j in 0..n {
        if d[j] == 0.0 {
            unconstrained[j] = true;
        }
    }
    let mut cov = DMatrix::from_fn(n, n, |i, j| inv[(i, j)] * d[i] * d[j]);
    for j in 0..n {
        if unconstrained[j] {
            for k in 0..n {
                cov[(j, k)] = 0.0;
                cov[(k, j)] = 0.0;
            }
            cov[(j, j)] = f64::INFINITY;
        }
    }
    cov
}
