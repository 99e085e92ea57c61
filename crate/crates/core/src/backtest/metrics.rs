use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::settlement::opportunity_loss;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mae: f64,
    pub rmse: f64,
    /// Average opportunity loss.
    pub aol: f64,
}

/// MAE, RMSE (square root of the mean squared error) and AOL of `predictions`.
pub fn compute_metrics(actuals: &[f64], predictions: &[f64], psi_minus: &[f64], psi_plus: &[f64]) -> Result<Metrics> {
    let n = actuals.len();
    for len in [predictions.len(), psi_minus.len(), psi_plus.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, actual: len });
        }
    }
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut loss = 0.0;
    for t in 0..n {
        let err = actuals[t] - predictions[t];
        abs += err.abs();
        sq += err * err;
        loss += opportunity_loss(actuals[t], predictions[t], psi_minus[t], psi_plus[t]);
    }
    let n = n as f64;
    Ok(Metrics { mae: abs / n, rmse: (sq / n).sqrt(), aol: loss / n })
}

/// Percentage reduction relative to the benchmark; undefined when the
/// benchmark metric is zero.
pub fn reduction(benchmark: f64, model: f64) -> Option<f64> {
    (benchmark != 0.0).then(|| 100.0 * (benchmark - model) / benchmark)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reductions {
    pub mae: Option<f64>,
    pub rmse: Option<f64>,
    pub aol: Option<f64>,
}

impl Reductions {
    pub fn between(benchmark: &Metrics, model: &Metrics) -> Self {
        Self {
            mae: reduction(benchmark.mae, model.mae),
            rmse: reduction(benchmark.rmse, model.rmse),
            aol: reduction(benchmark.aol, model.aol),
        }
    }
}
