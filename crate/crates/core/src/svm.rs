//! Linear SVM (L2-regularized hinge loss) trained by dual coordinate ascent.
//!
//! The bias is learned as the weight of an appended constant feature equal to
//! 1, so the minimized primal is
//!
//! ```text
//! 0.5 * (||w||^2 + b^2) + C * sum_i max(0, 1 - y_i (w . x_i + b))
//! ```
//!
//! Each pass visits the examples in a freshly shuffled order drawn from the
//! seeded generator. Training stops once the spread of projected gradients
//! over a pass drops below the tolerance.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Penalty `C` on the summed hinge loss.
    pub cost: f64,
    /// Stop once `max PG - min PG` over a pass is below this.
    pub tolerance: f64,
    pub max_passes: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            cost: 1.0,
            tolerance: 1e-4,
            max_passes: 10_000,
            seed: 0,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cost > 0.0 && self.cost.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "cost {} must be > 0",
                self.cost
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be > 0".into()));
        }
        if self.max_passes < 1 {
            return Err(Error::InvalidArgument("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub training_objective: f64,
    pub passes: usize,
    pub converged: bool,
}

/// Maps `{0, 1}` labels to `{-1, +1}`.
pub fn to_signed(labels: &[u8]) -> Vec<i8> {
    labels
        .iter()
        .map(|&l| if l == 1 { 1 } else { -1 })
        .collect()
}

/// Maps `{-1, +1}` back to `{0, 1}`.
pub fn to_binary(labels: &[i8]) -> Vec<u8> {
    labels.iter().map(|&l| u8::from(l > 0)).collect()
}

/// Primal objective with the bias regularized alongside the weights.
pub fn primal_objective(
    x: ArrayView2<'_, f64>,
    y: &[i8],
    weights: &[f64],
    bias: f64,
    cost: f64,
) -> f64 {
    let reg = 0.5 * (weights.iter().map(|w| w * w).sum::<f64>() + bias * bias);
    let hinge: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let f = row.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>() + bias;
            (1.0 - f64::from(yi) * f).max(0.0)
        })
        .sum();
    reg + cost * hinge
}

pub fn train(x: ArrayView2<'_, f64>, y: &[i8], config: &SvmConfig) -> Result<LinearSvmModel> {
    config.validate()?;
    let (n, p) = x.dim();
    if n != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{n} rows but {} labels",
            y.len()
        )));
    }
    if let Some(bad) = y.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::InvalidArgument(format!(
            "label {bad} is not -1 or +1"
        )));
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == n {
        return Err(Error::SingleClass(vec![if positives == 0 {
            "-1"
        } else {
            "+1"
        }
        .into()]));
    }

    let x = x.as_standard_layout();
    let rows: Vec<&[f64]> = x
        .rows()
        .into_iter()
        .map(|r| r.to_slice().expect("standard layout"))
        .collect();
    let diag: Vec<f64> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .collect();

    let c = config.cost;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut passes = 0;
    let mut converged = false;

    while passes < config.max_passes {
        order.shuffle(&mut rng);
        passes += 1;
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let yi = f64::from(y[i]);
            let xi = rows[i];
            let g = yi * (xi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * yi;
                for (wj, &v) in w.iter_mut().zip(xi) {
                    *wj += step * v;
                }
                b += step;
            }
        }
        if pg_max - pg_min < config.tolerance {
            converged = true;
            break;
        }
    }

    let training_objective = primal_objective(x.view(), y, &w, b, c);
    Ok(LinearSvmModel {
        weights: w,
        bias: b,
        training_objective,
        passes,
        converged,
    })
}

/// `w . x + b` per row.
pub fn decision_values(model: &LinearSvmModel, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
    if x.ncols() != model.weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "model has {} weights, matrix has {} columns",
            model.weights.len(),
            x.ncols()
        )));
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .zip(&model.weights)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + model.bias
        })
        .collect())
}

/// Sign of the decision value; exactly zero maps to `+1`.
pub fn predict_labels(model: &LinearSvmModel, x: ArrayView2<'_, f64>) -> Result<Vec<i8>> {
    Ok(decision_values(model, x)?
        .into_iter()
        .map(|v| if v >= 0.0 { 1 } else { -1 })
        .collect())
}
