//! Elastic net regression by cyclic coordinate descent.
//!
//! Minimizes over `(b0, beta)`:
//!
//! ```text
//! (1/(2n)) * ||y - b0 - X beta||^2 + lambda * (alpha * ||beta||_1 + (1 - alpha)/2 * ||beta||_2^2)
//! ```
//!
//! The intercept is never penalized: `X` and `y` are centered internally and
//! `b0` is recovered from the centers. With `alpha = 1` the problem is the
//! lasso. Columns are expected to be standardized; the coordinate update
//! divides by the column's actual second moment so slightly off-unit columns
//! (e.g. a cross-validation fold of a standardized matrix) are still solved
//! exactly.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array2, ArrayView2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Problems with at most this many features precompute the Gram matrix.
const GRAM_MAX_FEATURES: usize = 500;

/// Columns with a smaller second moment are treated as constant.
const ZERO_COLUMN: f64 = 1e-20;

/// Active-set sweeps between attempts at solving the active face directly.
const FACE_SOLVE_EVERY: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetConfig {
    /// Mixing weight between the L1 (`alpha = 1`) and L2 penalties.
    pub alpha: f64,
    pub lambda_count: usize,
    /// Smallest grid lambda as a fraction of `lambda_max`. `None` selects
    /// `1e-4` when `n > p` and `1e-2` otherwise.
    pub lambda_min_ratio: Option<f64>,
    /// Convergence threshold on the largest coefficient change in a sweep.
    pub tolerance: f64,
    pub max_sweeps: usize,
    pub cv_folds: usize,
    pub lambda_rule: LambdaRule,
    pub seed: u64,
}

/// How `cv_fit` picks lambda from the cross-validation curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRule {
    /// Lambda with the smallest mean error.
    MinError,
    /// Largest lambda whose mean error is within one standard error
    /// (`std / sqrt(folds)`) of the minimum.
    #[default]
    OneStandardError,
}

impl Default for ElasticNetConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            lambda_count: 100,
            lambda_min_ratio: None,
            tolerance: 1e-7,
            max_sweeps: 100_000,
            cv_folds: 10,
            lambda_rule: LambdaRule::default(),
            seed: 0,
        }
    }
}

impl ElasticNetConfig {
    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.lambda_count < 1 {
            return Err(Error::InvalidArgument("lambda_count must be >= 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be > 0".into()));
        }
        if self.max_sweeps < 1 {
            return Err(Error::InvalidArgument("max_sweeps must be >= 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidArgument("cv_folds must be >= 2".into()));
        }
        if let Some(r) = self.lambda_min_ratio {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "lambda_min_ratio {r} outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn min_ratio_for(&self, n: usize, p: usize) -> f64 {
        self.lambda_min_ratio
            .unwrap_or(if n > p { 1e-4 } else { 1e-2 })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1]; pure ridge is not supported"
        )))
    }
}

/// One point of the cross-validation curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvPoint {
    pub lambda: f64,
    pub mean_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetFit {
    pub intercept: f64,
    /// Coefficients on the scale of the columns passed to the solver.
    pub coefficients: Vec<f64>,
    pub lambda: f64,
    pub alpha: f64,
    /// Objective value at the returned coefficients.
    pub objective: f64,
    pub sweeps_used: usize,
    pub converged: bool,
    /// Objective after every sweep, in order.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cv_curve: Vec<CvPoint>,
}

impl ElasticNetFit {
    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|b| **b != 0.0).count()
    }
}

/// Ordered, duplicate-free set of feature indices.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureSubset {
    indices: Vec<usize>,
}

impl FeatureSubset {
    /// Fails when an index repeats or is `>= p`.
    pub fn new(indices: Vec<usize>, p: usize) -> Result<Self> {
        let mut seen = vec![false; p];
        for &i in &indices {
            if i >= p {
                return Err(Error::InvalidArgument(format!(
                    "feature index {i} >= p = {p}"
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!(
                    "feature index {i} repeated"
                )));
            }
        }
        Ok(Self { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `sign(z) * max(|z| - gamma, 0)`.
#[inline]
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    debug_assert!(gamma >= 0.0, "soft threshold with negative gamma");
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Smallest lambda whose solution is all zeros: `max_j |x_j . y| / (n * alpha)`.
///
/// `x` is taken as given (standardized) and `y` as already centered.
pub fn lambda_max(x: ArrayView2<'_, f64>, y: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} rows but {} targets",
            x.nrows(),
            y.len()
        )));
    }
    let n = y.len() as f64;
    let best = x
        .columns()
        .into_iter()
        .map(|col| col.iter().zip(y).map(|(a, b)| a * b).sum::<f64>().abs() / n)
        .fold(0.0, f64::max);
    Ok(best / alpha)
}

/// `count`-point geometric grid from `lambda_max` down to `lambda_max * min_ratio`.
pub fn lambda_grid(lambda_max: f64, count: usize, min_ratio: f64) -> Vec<f64> {
    if count == 1 {
        return vec![lambda_max];
    }
    let step = min_ratio.ln() / (count - 1) as f64;
    (0..count)
        .map(|i| lambda_max * (step * i as f64).exp())
        .collect()
}

/// Elastic net objective for an arbitrary coefficient vector.
pub fn objective_value(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    intercept: f64,
    coefficients: &[f64],
    lambda: f64,
    alpha: f64,
) -> f64 {
    let n = y.len() as f64;
    let rss: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &t)| {
            let pred = intercept
                + row
                    .iter()
                    .zip(coefficients)
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            (t - pred) * (t - pred)
        })
        .sum();
    rss / (2.0 * n) + penalty(coefficients, lambda, alpha)
}

fn penalty(beta: &[f64], lambda: f64, alpha: f64) -> f64 {
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    lambda * (alpha * l1 + 0.5 * (1.0 - alpha) * l2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum UpdateMode {
    /// Maintain `X^T r / n` through a precomputed Gram matrix.
    Gram,
    /// Maintain the residual vector directly.
    Residual,
}

/// Centered copy of a regression problem, stored column-major.
struct Problem {
    n: usize,
    p: usize,
    /// Row `j` holds centered column `j`.
    columns: Array2<f64>,
    x_means: Vec<f64>,
    y: Vec<f64>,
    y_mean: f64,
    /// `(1/n) ||x_j||^2` of the centered columns.
    col_sq: Vec<f64>,
    /// `(1/n) x_j . y`.
    xty: Vec<f64>,
    yy: f64,
    gram: Option<Array2<f64>>,
}

impl Problem {
    fn new(
        x: ArrayView2<'_, f64>,
        y: &[f64],
        rows: Option<&[usize]>,
        mode: UpdateMode,
    ) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} targets",
                x.nrows(),
                y.len()
            )));
        }
        let all: Vec<usize>;
        let rows = match rows {
            Some(r) => r,
            None => {
                all = (0..y.len()).collect();
                &all
            }
        };
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyRows);
        }
        let p = x.ncols();
        let nf = n as f64;
        let y_mean = rows.iter().map(|&r| y[r]).sum::<f64>() / nf;
        let yc: Vec<f64> = rows.iter().map(|&r| y[r] - y_mean).collect();
        let mut columns = Array2::zeros((p, n));
        let mut x_means = vec![0.0; p];
        for j in 0..p {
            let col = x.column(j);
            let mean = rows.iter().map(|&r| col[r]).sum::<f64>() / nf;
            x_means[j] = mean;
            for (dst, &r) in columns.row_mut(j).iter_mut().zip(rows) {
                *dst = col[r] - mean;
            }
        }
        let col_sq = columns.rows().into_iter().map(|c| c.dot(&c) / nf).collect();
        let xty = columns
            .rows()
            .into_iter()
            .map(|c| c.iter().zip(&yc).map(|(a, b)| a * b).sum::<f64>() / nf)
            .collect();
        let yy = yc.iter().map(|v| v * v).sum::<f64>() / nf;
        let gram = match mode {
            UpdateMode::Gram => Some(columns.dot(&columns.t()) / nf),
            UpdateMode::Residual => None,
        };
        Ok(Self {
            n,
            p,
            columns,
            x_means,
            y: yc,
            y_mean,
            col_sq,
            xty,
            yy,
            gram,
        })
    }

    fn auto(x: ArrayView2<'_, f64>, y: &[f64], rows: Option<&[usize]>) -> Result<Self> {
        let mode = if x.ncols() <= GRAM_MAX_FEATURES {
            UpdateMode::Gram
        } else {
            UpdateMode::Residual
        };
        Self::new(x, y, rows, mode)
    }

    fn lambda_max(&self, alpha: f64) -> f64 {
        self.xty.iter().fold(0.0f64, |m, v| m.max(v.abs())) / alpha
    }

    fn intercept(&self, beta: &[f64]) -> f64 {
        self.y_mean
            - self
                .x_means
                .iter()
                .zip(beta)
                .map(|(m, b)| m * b)
                .sum::<f64>()
    }

    fn solve(
        &self,
        lambda: f64,
        alpha: f64,
        tol: f64,
        max_sweeps: usize,
        start: Option<&[f64]>,
    ) -> Solution {
        let mut state = match &self.gram {
            Some(_) => State::gram(self, start),
            None => State::residual(self, start),
        };
        let l1 = lambda * alpha;
        let l2 = lambda * (1.0 - alpha);
        let mut trace = Vec::new();
        let mut sweeps = 0;
        let mut converged = false;
        let all: Vec<usize> = (0..self.p).collect();
        while sweeps < max_sweeps {
            let delta = state.sweep(self, &all, l1, l2);
            sweeps += 1;
            trace.push(state.objective(self, lambda, alpha));
            if delta < tol {
                converged = true;
                break;
            }
            // Iterate on the current active set before the next full sweep.
            let active: Vec<usize> = all
                .iter()
                .copied()
                .filter(|&j| state.beta[j] != 0.0)
                .collect();
            let mut inner = 0;
            while sweeps < max_sweeps {
                let delta = state.sweep(self, &active, l1, l2);
                sweeps += 1;
                inner += 1;
                trace.push(state.objective(self, lambda, alpha));
                if delta < tol {
                    break;
                }
                // Correlated columns make coordinate descent crawl; once the
                // support has settled, jump straight to its exact minimizer.
                if inner % FACE_SOLVE_EVERY == 0 {
                    state.face_solve(self, &active, lambda, alpha);
                }
            }
        }
        let objective = trace
            .last()
            .copied()
            .unwrap_or_else(|| state.objective(self, lambda, alpha));
        Solution {
            beta: state.beta,
            sweeps,
            converged,
            trace,
            objective,
        }
    }

    fn fit(
        &self,
        lambda: f64,
        alpha: f64,
        tol: f64,
        max_sweeps: usize,
        start: Option<&[f64]>,
    ) -> ElasticNetFit {
        let sol = self.solve(lambda, alpha, tol, max_sweeps, start);
        ElasticNetFit {
            intercept: self.intercept(&sol.beta),
            coefficients: sol.beta,
            lambda,
            alpha,
            objective: sol.objective,
            sweeps_used: sol.sweeps,
            converged: sol.converged,
            objective_trace: sol.trace,
            cv_curve: Vec::new(),
        }
    }

    fn path(&self, grid: &[f64], alpha: f64, config: &ElasticNetConfig) -> Vec<ElasticNetFit> {
        let mut fits: Vec<ElasticNetFit> = Vec::with_capacity(grid.len());
        for &lambda in grid {
            let start = fits.last().map(|f| f.coefficients.as_slice());
            fits.push(self.fit(lambda, alpha, config.tolerance, config.max_sweeps, start));
        }
        fits
    }
}

struct Solution {
    beta: Vec<f64>,
    sweeps: usize,
    converged: bool,
    trace: Vec<f64>,
    objective: f64,
}

/// Mutable solver state: coefficients plus either the residual or the
/// running correlations `c_j = x_j . r / n`.
struct State {
    beta: Vec<f64>,
    residual: Vec<f64>,
    corr: Vec<f64>,
}

impl State {
    fn start(problem: &Problem, start: Option<&[f64]>) -> Vec<f64> {
        match start {
            Some(b) => b
                .iter()
                .zip(&problem.col_sq)
                .map(|(&v, &s)| if s < ZERO_COLUMN { 0.0 } else { v })
                .collect(),
            None => vec![0.0; problem.p],
        }
    }

    fn gram(problem: &Problem, start: Option<&[f64]>) -> Self {
        let beta = Self::start(problem, start);
        let gram = problem.gram.as_ref().expect("gram mode");
        let corr = (0..problem.p)
            .map(|j| {
                problem.xty[j]
                    - gram
                        .row(j)
                        .iter()
                        .zip(&beta)
                        .map(|(g, b)| g * b)
                        .sum::<f64>()
            })
            .collect();
        Self {
            beta,
            residual: Vec::new(),
            corr,
        }
    }

    fn residual(problem: &Problem, start: Option<&[f64]>) -> Self {
        let beta = Self::start(problem, start);
        let mut residual = problem.y.clone();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (r, &x) in residual.iter_mut().zip(problem.columns.row(j)) {
                    *r -= b * x;
                }
            }
        }
        Self {
            beta,
            residual,
            corr: Vec::new(),
        }
    }

    /// One cyclic pass over `coords`; returns the largest coefficient change.
    fn sweep(&mut self, problem: &Problem, coords: &[usize], l1: f64, l2: f64) -> f64 {
        let nf = problem.n as f64;
        let mut max_delta = 0.0f64;
        for &j in coords {
            let sq = problem.col_sq[j];
            if sq < ZERO_COLUMN {
                continue;
            }
            let old = self.beta[j];
            let c = match &problem.gram {
                Some(_) => self.corr[j],
                None => {
                    let col = problem.columns.row(j);
                    let col = col.as_slice().expect("contiguous column");
                    col.iter()
                        .zip(&self.residual)
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        / nf
                }
            };
            let new = soft_threshold(c + sq * old, l1) / (sq + l2);
            let delta = new - old;
            if delta == 0.0 {
                continue;
            }
            self.beta[j] = new;
            max_delta = max_delta.max(delta.abs());
            match &problem.gram {
                Some(gram) => {
                    for (c, &g) in self.corr.iter_mut().zip(gram.row(j)) {
                        *c -= delta * g;
                    }
                }
                None => {
                    for (r, &x) in self.residual.iter_mut().zip(problem.columns.row(j)) {
                        *r -= delta * x;
                    }
                }
            }
        }
        max_delta
    }

    /// Replaces the nonzero coefficients in `active` by the minimizer of the
    /// objective restricted to their current signs, i.e. the solution of
    /// `(G_AA + l2 I) b = xty_A - l1 sign(b_A)`. The move is kept only if
    /// every sign survives and the objective does not rise. Gram mode only.
    fn face_solve(&mut self, problem: &Problem, active: &[usize], lambda: f64, alpha: f64) -> bool {
        let Some(gram) = &problem.gram else {
            return false;
        };
        let coords: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&j| self.beta[j] != 0.0)
            .collect();
        if coords.is_empty() {
            return false;
        }
        let (l1, l2) = (lambda * alpha, lambda * (1.0 - alpha));
        let m = coords.len();
        let lhs = DMatrix::from_fn(m, m, |r, c| {
            gram[[coords[r], coords[c]]] + if r == c { l2 } else { 0.0 }
        });
        let rhs = DVector::from_fn(m, |r, _| {
            problem.xty[coords[r]] - l1 * self.beta[coords[r]].signum()
        });
        let Some(chol) = lhs.cholesky() else {
            return false;
        };
        let sol = chol.solve(&rhs);
        let keeps_signs = coords
            .iter()
            .zip(sol.iter())
            .all(|(&j, &v)| v != 0.0 && v.signum() == self.beta[j].signum());
        if !keeps_signs {
            return false;
        }
        let before = self.objective(problem, lambda, alpha);
        let mut beta = self.beta.clone();
        for (&j, &v) in coords.iter().zip(sol.iter()) {
            beta[j] = v;
        }
        let previous = std::mem::replace(self, Self::gram(problem, Some(&beta)));
        if self.objective(problem, lambda, alpha) > before {
            *self = previous;
            return false;
        }
        true
    }

    fn objective(&self, problem: &Problem, lambda: f64, alpha: f64) -> f64 {
        let half_mse = match &problem.gram {
            // ||r||^2 / n = yy - 2 b.xty + b.G.b and G.b = xty - c.
            Some(_) => {
                let s: f64 = self
                    .beta
                    .iter()
                    .zip(problem.xty.iter().zip(&self.corr))
                    .map(|(b, (t, c))| b * (t + c))
                    .sum();
                0.5 * (problem.yy - s)
            }
            None => self.residual.iter().map(|r| r * r).sum::<f64>() / (2.0 * problem.n as f64),
        };
        half_mse + penalty(&self.beta, lambda, alpha)
    }
}

/// Fits the elastic net at a single `lambda`.
pub fn fit(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    lambda: f64,
    alpha: f64,
    config: &ElasticNetConfig,
    warm_start: Option<&[f64]>,
) -> Result<ElasticNetFit> {
    check_alpha(alpha)?;
    config.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda {lambda} must be finite and >= 0"
        )));
    }
    if let Some(w) = warm_start {
        if w.len() != x.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "warm start has {} coefficients for {} features",
                w.len(),
                x.ncols()
            )));
        }
    }
    let problem = Problem::auto(x, y, None)?;
    Ok(problem.fit(
        lambda,
        alpha,
        config.tolerance,
        config.max_sweeps,
        warm_start,
    ))
}

#[cfg(test)]
pub(crate) fn fit_with_mode(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    lambda: f64,
    alpha: f64,
    config: &ElasticNetConfig,
    mode: UpdateMode,
) -> Result<ElasticNetFit> {
    let problem = Problem::new(x, y, None, mode)?;
    Ok(problem.fit(lambda, alpha, config.tolerance, config.max_sweeps, None))
}

/// Warm-started fits over the geometric lambda grid, largest lambda first.
pub fn fit_path(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    alpha: f64,
    config: &ElasticNetConfig,
) -> Result<Vec<ElasticNetFit>> {
    check_alpha(alpha)?;
    config.validate()?;
    let problem = Problem::auto(x, y, None)?;
    let grid = lambda_grid(
        problem.lambda_max(alpha),
        config.lambda_count,
        config.min_ratio_for(problem.n, problem.p),
    );
    Ok(problem.path(&grid, alpha, config))
}

/// Selects lambda by k-fold cross-validated mean squared error and refits on
/// all rows.
///
/// Folds come from a seeded shuffle and differ in size by at most one. The
/// grid is computed once from the full data; `config.lambda_rule` picks the
/// point on the curve.
pub fn cv_fit(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    alpha: f64,
    config: &ElasticNetConfig,
) -> Result<ElasticNetFit> {
    check_alpha(alpha)?;
    config.validate()?;
    let n = y.len();
    if n < config.cv_folds {
        return Err(Error::InvalidArgument(format!(
            "{n} cases cannot form {} folds",
            config.cv_folds
        )));
    }
    let full = Problem::auto(x, y, None)?;
    let grid = lambda_grid(
        full.lambda_max(alpha),
        config.lambda_count,
        config.min_ratio_for(full.n, full.p),
    );
    let folds = fold_assignment(n, config.cv_folds, config.seed);

    let k = config.cv_folds;
    let mut errors = vec![vec![0.0; grid.len()]; k];
    for (fold, fold_errors) in errors.iter_mut().enumerate() {
        let train: Vec<usize> = (0..n).filter(|&i| folds[i] != fold).collect();
        let held: Vec<usize> = (0..n).filter(|&i| folds[i] == fold).collect();
        let problem = Problem::auto(x, y, Some(&train))?;
        for (slot, f) in fold_errors
            .iter_mut()
            .zip(problem.path(&grid, alpha, config))
        {
            let sse: f64 = held
                .iter()
                .map(|&r| {
                    let pred = f.intercept
                        + x.row(r)
                            .iter()
                            .zip(&f.coefficients)
                            .map(|(a, b)| a * b)
                            .sum::<f64>();
                    (y[r] - pred) * (y[r] - pred)
                })
                .sum();
            *slot = sse / held.len() as f64;
        }
    }

    let curve: Vec<CvPoint> = grid
        .iter()
        .enumerate()
        .map(|(i, &lambda)| {
            let vals: Vec<f64> = errors.iter().map(|e| e[i]).collect();
            let (mean, std) = mean_and_sample_std(&vals);
            CvPoint {
                lambda,
                mean_error: mean,
                std_error: std,
            }
        })
        .collect();
    let best = choose_lambda(&curve, k, config.lambda_rule);
    let mut path = full.path(&grid[..=best], alpha, config);
    let mut chosen = path.pop().expect("non-empty grid");
    chosen.cv_curve = curve;
    Ok(chosen)
}

/// Index into a largest-first curve. Ties resolve to the larger lambda.
fn choose_lambda(curve: &[CvPoint], folds: usize, rule: LambdaRule) -> usize {
    let mut best = 0;
    for (i, pt) in curve.iter().enumerate() {
        if pt.mean_error < curve[best].mean_error {
            best = i;
        }
    }
    match rule {
        LambdaRule::MinError => best,
        LambdaRule::OneStandardError => {
            let bound = curve[best].mean_error + curve[best].std_error / (folds as f64).sqrt();
            curve
                .iter()
                .position(|pt| pt.mean_error <= bound)
                .unwrap_or(best)
        }
    }
}

/// Fold index for every case: a seeded permutation dealt round-robin.
pub fn fold_assignment(n: usize, folds: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignment = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % folds;
    }
    assignment
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Indices of exactly nonzero coefficients (intercept excluded).
pub fn selected_features(fit: &ElasticNetFit) -> FeatureSubset {
    FeatureSubset {
        indices: fit
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect(),
    }
}

/// `b0 + X beta` per row.
pub fn predict(fit: &ElasticNetFit, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x.ncols() != fit.coefficients.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} coefficients, matrix has {} columns",
            fit.coefficients.len(),
            x.ncols()
        )));
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            fit.intercept
                + row
                    .iter()
                    .zip(&fit.coefficients)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
        })
        .collect())
}

/// Class decision for `{0, 1}` regression scores; `0.5` goes to class 1.
pub fn predict_label(score: f64) -> u8 {
    u8::from(score >= 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand_distr::{Distribution, StandardNormal};

    fn random_problem(seed: u64, n: usize, p: usize) -> (Array2<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Array2::from_shape_simple_fn((n, p), || StandardNormal.sample(&mut rng));
        for mut col in x.columns_mut() {
            let m: f64 = col.mean().unwrap();
            col -= m;
            let s = (col.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
            col /= s;
        }
        let y = (0..n)
            .map(|i| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x[[i, 0]] - 0.5 * x[[i, p - 1]] + e
            })
            .collect();
        (x, y)
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let z: f64 = StandardNormal.sample(&mut rng);
            assert_eq!(soft_threshold(z * 10.0, 0.0), z * 10.0);
        }
    }

    #[test]
    fn lambda_max_orthogonal_target_is_zero() {
        let x = ndarray::array![[1.0], [-1.0], [1.0], [-1.0]];
        let y = [1.0, 1.0, -1.0, -1.0];
        assert_eq!(lambda_max(x.view(), &y, 0.5).unwrap(), 0.0);
        assert!(lambda_max(x.view(), &y, 0.0).is_err());
    }

    #[test]
    fn gram_and_residual_modes_agree() {
        let cfg = ElasticNetConfig {
            tolerance: 1e-12,
            ..Default::default()
        };
        for seed in 0..10 {
            let (x, y) = random_problem(seed, 40, 8);
            for alpha in [0.5, 1.0] {
                let a = fit_with_mode(x.view(), &y, 0.05, alpha, &cfg, UpdateMode::Gram).unwrap();
                let b =
                    fit_with_mode(x.view(), &y, 0.05, alpha, &cfg, UpdateMode::Residual).unwrap();
                for (u, v) in a.coefficients.iter().zip(&b.coefficients) {
                    assert!((u - v).abs() < 1e-9, "{u} vs {v}");
                }
                assert!((a.objective - b.objective).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn warm_and_cold_fits_agree() {
        let cfg = ElasticNetConfig::default();
        for seed in 0..5 {
            let (x, y) = random_problem(seed, 60, 6);
            let path = fit_path(x.view(), &y, 0.75, &cfg).unwrap();
            for f in path.iter().step_by(9) {
                let cold = fit(x.view(), &y, f.lambda, 0.75, &cfg, None).unwrap();
                assert!((cold.objective - f.objective).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn path_endpoints() {
        let (x, y) = random_problem(3, 50, 10);
        let path = fit_path(x.view(), &y, 0.5, &ElasticNetConfig::default()).unwrap();
        assert_eq!(path.len(), 100);
        assert_eq!(path[0].nonzero_count(), 0);
        assert!(path.last().unwrap().nonzero_count() >= path[0].nonzero_count());
        assert!(path.windows(2).all(|w| w[0].lambda > w[1].lambda));
    }

    #[test]
    fn cv_fit_rejects_too_few_cases() {
        let (x, y) = random_problem(1, 9, 2);
        assert!(cv_fit(x.view(), &y, 1.0, &ElasticNetConfig::default()).is_err());
    }

    #[test]
    fn lambda_rules() {
        let pts = |m: &[f64], s: f64| -> Vec<CvPoint> {
            m.iter()
                .enumerate()
                .map(|(i, &e)| CvPoint {
                    lambda: 1.0 / (i + 1) as f64,
                    mean_error: e,
                    std_error: s,
                })
                .collect()
        };
        let curve = pts(&[0.30, 0.20, 0.11, 0.10, 0.10], 0.04);
        assert_eq!(choose_lambda(&curve, 4, LambdaRule::MinError), 3);
        // se = 0.04 / 2, bound 0.12
        assert_eq!(choose_lambda(&curve, 4, LambdaRule::OneStandardError), 2);
        assert_eq!(
            choose_lambda(&pts(&[0.2; 3], 0.0), 4, LambdaRule::MinError),
            0
        );
    }

    #[test]
    fn folds_are_balanced() {
        let f = fold_assignment(53, 10, 4);
        let mut sizes = [0usize; 10];
        f.iter().for_each(|&k| sizes[k] += 1);
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        assert!(hi - lo <= 1);
        assert_eq!(f, fold_assignment(53, 10, 4));
    }

    #[test]
    fn selected_and_predict() {
        let fit = ElasticNetFit {
            intercept: 0.7,
            coefficients: vec![0.0, 0.3, 0.0, -1.2],
            lambda: 0.1,
            alpha: 1.0,
            objective: 0.0,
            sweeps_used: 1,
            converged: true,
            objective_trace: vec![],
            cv_curve: vec![],
        };
        assert_eq!(selected_features(&fit).indices(), [1, 3]);
        let zero = ElasticNetFit {
            coefficients: vec![0.0; 4],
            ..fit.clone()
        };
        assert!(selected_features(&zero).is_empty());
        let scores = predict(&zero, Array2::from_elem((3, 4), 2.0).view()).unwrap();
        assert!(scores.iter().all(|&s| s == 0.7 && predict_label(s) == 1));
        assert_eq!(predict_label(0.5), 1);
        assert_eq!(predict_label(0.4999), 0);
        assert!(predict(&fit, Array2::zeros((1, 3)).view()).is_err());
    }

    #[test]
    fn feature_subset_validates() {
        assert!(FeatureSubset::new(vec![0, 2], 3).is_ok());
        assert!(FeatureSubset::new(vec![0, 0], 3).is_err());
        assert!(FeatureSubset::new(vec![3], 3).is_err());
    }
}
