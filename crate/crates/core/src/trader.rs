//! Second step of the trading procedure: rescale the improved forecast by a
//! single coefficient fitted on realized opportunity costs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::WindowId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradingRule {
    /// Bid multiplier applied to the improved forecast.
    pub a: f64,
    /// Normalized training objective at `a`.
    pub objective: f64,
    pub window: Option<WindowId>,
}

fn check_lengths(forecast: &[f64], actual: &[f64], psi_minus: &[f64], psi_plus: &[f64]) -> Result<()> {
    let n = forecast.len();
    for len in [actual.len(), psi_minus.len(), psi_plus.len()] {
        if len != n {
            return Err(Error::LengthMismatch { expected: n, actual: len });
        }
    }
    if n == 0 {
        return Err(Error::EmptySamples);
    }
    Ok(())
}

/// Normalized trading loss of the multiplier `a`.
pub fn trading_objective(a: f64, forecast: &[f64], actual: &[f64], psi_minus: &[f64], psi_plus: &[f64]) -> f64 {
    let total: f64 = forecast
        .iter()
        .zip(actual)
        .zip(psi_minus.iter().zip(psi_plus))
        .map(|((w, e), (pm, pp))| {
            let r = a * w - e;
            pm * r.max(0.0) + pp * (-r).max(0.0)
        })
        .sum();
    total / forecast.len() as f64
}

/// Fits `a` by scanning the breakpoints `actual_t / forecast_t` of the convex
/// piecewise-linear objective. Among several minimizers the smallest is
/// returned; if the minimizers extend to minus infinity, zero is returned when
/// it is optimal.
pub fn fit_trading(forecast: &[f64], actual: &[f64], psi_minus: &[f64], psi_plus: &[f64]) -> Result<TradingRule> {
    check_lengths(forecast, actual, psi_minus, psi_plus)?;
    if forecast.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidConfig("forecast values must be finite and nonnegative".into()));
    }
    if psi_minus.iter().chain(psi_plus).any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidConfig("opportunity costs must be finite and nonnegative".into()));
    }

    // (breakpoint, slope increase when a crosses it)
    let mut kinks: Vec<(f64, f64)> = Vec::with_capacity(forecast.len());
    let mut slope = 0.0;
    let mut total_change = 0.0;
    for t in 0..forecast.len() {
        let w = forecast[t];
        if w > 0.0 {
            let jump = (psi_minus[t] + psi_plus[t]) * w;
            kinks.push((actual[t] / w, jump));
            slope -= psi_plus[t] * w;
            total_change += jump;
        }
    }
    if kinks.is_empty() {
        return Err(Error::UninformativeForecast);
    }
    kinks.sort_by(|x, y| x.0.total_cmp(&y.0));

    let tol = 1e-12 * total_change.max(f64::MIN_POSITIVE);
    let a = if slope >= -tol {
        // Nondecreasing everywhere: every a up to the first breakpoint is optimal.
        kinks[0].0.min(0.0)
    } else {
        let mut chosen = kinks[kinks.len() - 1].0;
        let mut i = 0;
        while i < kinks.len() {
            let b = kinks[i].0;
            while i < kinks.len() && kinks[i].0 == b {
                slope += kinks[i].1;
                i += 1;
            }
            if slope >= -tol {
                chosen = b;
                break;
            }
        }
        chosen
    };
    Ok(TradingRule { a, objective: trading_objective(a, forecast, actual, psi_minus, psi_plus), window: None })
}

/// Day-ahead bid, clipped to `[0, capacity]`.
pub fn bid(rule: &TradingRule, forecast: f64, capacity: f64) -> f64 {
    (rule.a * forecast).clamp(0.0, capacity)
}

/// `mean(psi_plus) / (mean(psi_minus) + mean(psi_plus))`.
pub fn critical_fractile(psi_minus: &[f64], psi_plus: &[f64]) -> Result<f64> {
    if psi_minus.is_empty() || psi_minus.len() != psi_plus.len() {
        return Err(Error::LengthMismatch { expected: psi_minus.len(), actual: psi_plus.len() });
    }
    let n = psi_minus.len() as f64;
    let mean_minus = psi_minus.iter().sum::<f64>() / n;
    let mean_plus = psi_plus.iter().sum::<f64>() / n;
    let denom = mean_minus + mean_plus;
    if denom <= 0.0 {
        return Err(Error::DegenerateCosts);
    }
    Ok(mean_plus / denom)
}
