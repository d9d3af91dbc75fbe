//! Regression families for `latency ~ w0 + wm*M + wv*V + wd*D`.
//!
//! Every method works on standardized feature columns (the raw counts span
//! 1e6..1e11) with a centered target, and reports coefficients on the
//! original scale.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::LatencyError;

/// Raw-scale linear model: `intercept + coef . x`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coef: Vec<f64>,
    /// Iterations used by iterative solvers; 0 for closed forms.
    pub iterations: usize,
}

impl LinearFit {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesRidgeParams {
    pub max_iter: usize,
    pub tol: f64,
    pub alpha_1: f64,
    pub alpha_2: f64,
    pub lambda_1: f64,
    pub lambda_2: f64,
}

impl Default for BayesRidgeParams {
    fn default() -> Self {
        BayesRidgeParams { max_iter: 300, tol: 1e-10, alpha_1: 1e-6, alpha_2: 1e-6, lambda_1: 1e-6, lambda_2: 1e-6 }
    }
}

/// Per-sample gradient descent on the squared epsilon-insensitive loss with
/// an `eta0 / t^power_t` step schedule and L2 penalty `alpha`. `epsilon` is
/// in units of the target's standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdParams {
    pub seed: u64,
    pub epochs: usize,
    pub eta0: f64,
    pub power_t: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

impl Default for SgdParams {
    fn default() -> Self {
        SgdParams { seed: 0, epochs: 100, eta0: 0.01, power_t: 0.25, alpha: 1e-4, epsilon: 0.01 }
    }
}

/// Primal L2-loss support-vector regression,
/// `0.5*|w|^2 + c * sum(max(0, |r| - epsilon)^2)`, minimized by a
/// generalized Newton iteration with backtracking.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams { c: 1.0, epsilon: 0.0, max_iter: 100, tol: 1e-12 }
    }
}

/// Centered and scaled design.
pub(crate) struct Standardized {
    pub z: DMatrix<f64>,
    pub y: DVector<f64>,
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
}

impl Standardized {
    pub fn new(rows: &[Vec<f64>], y: &[f64]) -> Standardized {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.len());
        let nf = n as f64;
        let x_mean: Vec<f64> = (0..p).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / nf).collect();
        let x_scale: Vec<f64> = (0..p)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - x_mean[j]).powi(2)).sum::<f64>() / nf;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        let z = DMatrix::from_fn(n, p, |i, j| (rows[i][j] - x_mean[j]) / x_scale[j]);
        let y_mean = y.iter().sum::<f64>() / nf;
        let y = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));
        Standardized { z, y, x_mean, x_scale, y_mean }
    }

    /// Maps standardized coefficients back to the raw feature scale.
    pub fn to_raw(&self, beta: &DVector<f64>, offset: f64, iterations: usize) -> LinearFit {
        let coef: Vec<f64> = beta.iter().zip(&self.x_scale).map(|(b, s)| b / s).collect();
        let intercept = self.y_mean + offset - coef.iter().zip(&self.x_mean).map(|(c, m)| c * m).sum::<f64>();
        LinearFit { intercept, coef, iterations }
    }
}

/// Least squares on a subset of columns, in the given column order.
/// Returns `None` when the columns are numerically dependent.
fn least_squares(z: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize]) -> Option<DVector<f64>> {
    let sub = z.select_columns(cols);
    let svd = sub.clone().svd(false, false);
    let sv = &svd.singular_values;
    let max = sv.max();
    if cols.is_empty() || !(max > 0.0) || sv.min() <= max * 1e-10 {
        return None;
    }
    let gram = sub.transpose() * &sub;
    let rhs = sub.transpose() * y;
    gram.cholesky().map(|c| c.solve(&rhs))
}

pub(crate) fn ols(s: &Standardized) -> Result<LinearFit, LatencyError> {
    let cols: Vec<usize> = (0..s.z.ncols()).collect();
    let beta = least_squares(&s.z, &s.y, &cols).ok_or(LatencyError::RankDeficient)?;
    Ok(s.to_raw(&beta, 0.0, 0))
}

pub(crate) fn ridge(s: &Standardized, alpha: f64) -> Result<LinearFit, LatencyError> {
    let p = s.z.ncols();
    let gram = s.z.transpose() * &s.z + DMatrix::identity(p, p) * alpha;
    let rhs = s.z.transpose() * &s.y;
    let beta = gram.cholesky().ok_or(LatencyError::RankDeficient)?.solve(&rhs);
    Ok(s.to_raw(&beta, 0.0, 0))
}

/// Evidence maximization over the noise precision `alpha` and the weight
/// precision `lambda` with Gamma hyperpriors.
pub(crate) fn bayes_ridge(s: &Standardized, prm: &BayesRidgeParams) -> Result<LinearFit, LatencyError> {
    let n = s.z.nrows() as f64;
    let gram = s.z.transpose() * &s.z;
    let xty = s.z.transpose() * &s.y;
    let eig = SymmetricEigen::new(gram);
    let var_y = s.y.norm_squared() / n;
    let mut alpha = if var_y > 0.0 { 1.0 / var_y } else { 1.0 };
    let mut lambda = 1.0;
    let mut coef = DVector::zeros(s.z.ncols());
    let v = &eig.eigenvectors;
    let vt_xty = v.transpose() * &xty;
    let mut iterations = 0;
    for it in 1..=prm.max_iter {
        iterations = it;
        let ratio = lambda / alpha;
        let scaled = DVector::from_iterator(
            vt_xty.len(),
            vt_xty.iter().zip(eig.eigenvalues.iter()).map(|(b, e)| b / (e + ratio)),
        );
        let new_coef = v * scaled;
        let sse = (&s.y - &s.z * &new_coef).norm_squared();
        let gamma: f64 = eig.eigenvalues.iter().map(|e| alpha * e / (lambda + alpha * e)).sum();
        lambda = (gamma + 2.0 * prm.lambda_1) / (new_coef.norm_squared() + 2.0 * prm.lambda_2);
        alpha = (n - gamma + 2.0 * prm.alpha_1) / (sse + 2.0 * prm.alpha_2);
        let delta: f64 = (&new_coef - &coef).abs().sum();
        coef = new_coef;
        if it > 1 && delta < prm.tol {
            break;
        }
    }
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(LatencyError::Diverged("bayes_ridge"));
    }
    Ok(s.to_raw(&coef, 0.0, iterations))
}

/// Greedy orthogonal matching pursuit with `nonzero` atoms; the final
/// coefficients are the least-squares fit on the selected columns.
pub(crate) fn omp(s: &Standardized, nonzero: usize) -> Result<LinearFit, LatencyError> {
    let p = s.z.ncols();
    let k = nonzero.min(p);
    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut residual = s.y.clone();
    let mut beta_sel = DVector::zeros(0);
    let scale = s.y.norm().max(f64::MIN_POSITIVE);
    while selected.len() < k {
        if residual.norm() <= 1e-14 * scale {
            break;
        }
        let best = (0..p)
            .filter(|j| !selected.contains(j))
            .map(|j| (j, s.z.column(j).dot(&residual).abs()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(j, _)| j);
        let Some(j) = best else { break };
        selected.push(j);
        selected.sort_unstable();
        beta_sel = least_squares(&s.z, &s.y, &selected).ok_or(LatencyError::RankDeficient)?;
        residual = &s.y - s.z.select_columns(&selected) * &beta_sel;
    }
    let mut beta = DVector::zeros(p);
    for (slot, &j) in selected.iter().enumerate() {
        beta[j] = beta_sel[slot];
    }
    Ok(s.to_raw(&beta, 0.0, selected.len()))
}

fn eps_insensitive_grad(r: f64, eps: f64) -> f64 {
    if r > eps {
        2.0 * (r - eps)
    } else if r < -eps {
        2.0 * (r + eps)
    } else {
        0.0
    }
}

pub(crate) fn sgd(s: &Standardized, prm: &SgdParams) -> Result<LinearFit, LatencyError> {
    let n = s.z.nrows();
    let p = s.z.ncols();
    let y_scale = (s.y.norm_squared() / n as f64).sqrt().max(f64::MIN_POSITIVE);
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(prm.seed);
    let mut t = 0usize;
    for _ in 0..prm.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = prm.eta0 / (t as f64).powf(prm.power_t);
            let row = s.z.row(i);
            let pred = b + row.iter().zip(&w).map(|(x, wj)| x * wj).sum::<f64>();
            let g = eps_insensitive_grad(pred - s.y[i] / y_scale, prm.epsilon);
            for (j, wj) in w.iter_mut().enumerate() {
                *wj -= eta * (g * row[j] + prm.alpha * *wj);
            }
            b -= eta * g;
        }
    }
    if w.iter().chain([&b]).any(|v| !v.is_finite()) {
        return Err(LatencyError::Diverged("sgd"));
    }
    let beta = DVector::from_iterator(p, w.into_iter().map(|v| v * y_scale));
    Ok(s.to_raw(&beta, b * y_scale, prm.epochs))
}

fn svr_objective(s: &Standardized, y_scale: f64, theta: &DVector<f64>, prm: &SvrParams) -> f64 {
    let p = s.z.ncols();
    let w = theta.rows(0, p);
    let pred = &s.z * w + DVector::from_element(s.z.nrows(), theta[p]);
    let loss: f64 = pred
        .iter()
        .zip(s.y.iter())
        .map(|(f, y)| ((f - y / y_scale).abs() - prm.epsilon).max(0.0).powi(2))
        .sum();
    0.5 * w.norm_squared() + prm.c * loss
}

pub(crate) fn svr(s: &Standardized, prm: &SvrParams) -> Result<LinearFit, LatencyError> {
    let n = s.z.nrows();
    let p = s.z.ncols();
    let y_scale = (s.y.norm_squared() / n as f64).sqrt().max(f64::MIN_POSITIVE);
    // Augmented design [Z | 1]; the intercept is not penalized.
    let a = DMatrix::from_fn(n, p + 1, |i, j| if j < p { s.z[(i, j)] } else { 1.0 });
    let target = s.y.map(|v| v / y_scale);
    let mut theta = DVector::zeros(p + 1);
    let mut obj = svr_objective(s, y_scale, &theta, prm);
    let mut iterations = 0;
    for it in 1..=prm.max_iter {
        iterations = it;
        let r = &a * &theta - &target;
        let active: Vec<usize> = (0..n).filter(|&i| r[i].abs() > prm.epsilon).collect();
        let mut hess = DMatrix::<f64>::zeros(p + 1, p + 1);
        let mut grad = DVector::<f64>::zeros(p + 1);
        for j in 0..p {
            hess[(j, j)] = 1.0;
            grad[j] = theta[j];
        }
        for &i in &active {
            let row = a.row(i).transpose();
            hess += &row * row.transpose() * (2.0 * prm.c);
            grad += &row * (prm.c * eps_insensitive_grad(r[i], prm.epsilon));
        }
        // Keeps the system solvable when no sample is active.
        hess[(p, p)] += 1e-12;
        let Some(chol) = hess.cholesky() else {
            return Err(LatencyError::Diverged("svr"));
        };
        let step = chol.solve(&grad);
        let mut t = 1.0;
        let mut next = &theta - &step * t;
        let mut next_obj = svr_objective(s, y_scale, &next, prm);
        while next_obj > obj && t > 1e-10 {
            t *= 0.5;
            next = &theta - &step * t;
            next_obj = svr_objective(s, y_scale, &next, prm);
        }
        let improvement = obj - next_obj;
        if next_obj <= obj {
            theta = next;
            obj = next_obj;
        }
        if improvement.abs() <= prm.tol * obj.abs().max(1.0) {
            break;
        }
    }
    let beta = DVector::from_iterator(p, theta.rows(0, p).iter().map(|v| v * y_scale));
    Ok(s.to_raw(&beta, theta[p] * y_scale, iterations))
}
