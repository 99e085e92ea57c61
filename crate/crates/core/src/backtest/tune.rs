use std::ops::Range;

use log::info;
use serde::{Deserialize, Serialize};

use super::engine::{run_backtest, BacktestConfig, Mode};
use super::metrics::Reductions;
use super::window::DayAxis;
use crate::dataset::MarketDataset;
use crate::error::{Error, Result};
use crate::forecaster::ModelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneEntry {
    pub length_days: usize,
    /// False when the validation days lack the history this length needs.
    pub available: bool,
    pub reductions: Option<Reductions>,
    /// Reduction used for selection: MAE in forecast mode, AOL of the
    /// two-step strategy in trade mode.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub mode: Mode,
    pub validation_days: Range<usize>,
    pub entries: Vec<TuneEntry>,
    pub selected: Option<usize>,
}

/// Evaluates each candidate length on the same validation days and selects the
/// one with the largest reduction against the benchmark, preferring the
/// shorter length on ties. In trade mode the candidates are trading-window
/// lengths and the forecasting window stays as configured.
pub fn tune_window_length(
    dataset: &MarketDataset,
    spec: &ModelSpec,
    grid: &[usize],
    validation_days: Range<usize>,
    base: &BacktestConfig,
    mode: Mode,
) -> Result<TuneReport> {
    if grid.is_empty() || grid.contains(&0) {
        return Err(Error::InvalidConfig("window grid must be nonempty and positive".into()));
    }
    if validation_days.is_empty() {
        return Err(Error::InvalidConfig("validation range is empty".into()));
    }
    let axis = DayAxis::of(dataset);
    let mut grid = grid.to_vec();
    grid.sort_unstable();
    grid.dedup();

    let mut entries = Vec::with_capacity(grid.len());
    for &length in &grid {
        let mut config = base.clone();
        config.test_days = Some(validation_days.clone());
        let w = &mut config.window;
        let needed = match mode {
            Mode::Forecast => {
                w.training_days = length;
                length + w.gap_days
            }
            Mode::Trade => {
                w.trading_days = Some(length);
                w.training_days + length + 2 * w.gap_days
            }
        };
        let available = validation_days.start >= needed && validation_days.end <= axis.n_days;
        if !available {
            info!("length {length}: validation days lack history");
            entries.push(TuneEntry { length_days: length, available, reductions: None, score: None });
            continue;
        }
        let report = run_backtest(mode, dataset, spec, &config)?;
        let reductions = report.reductions[report.headline()];
        let score = match mode {
            Mode::Forecast => reductions.mae,
            Mode::Trade => reductions.aol,
        };
        info!("length {length}: score {score:?}");
        entries.push(TuneEntry { length_days: length, available, reductions: Some(reductions), score });
    }

    let mut selected: Option<(usize, f64)> = None;
    for e in &entries {
        if let Some(s) = e.score {
            if selected.is_none_or(|(_, best)| s > best) {
                selected = Some((e.length_days, s));
            }
        }
    }
    Ok(TuneReport { mode, validation_days, entries, selected: selected.map(|(l, _)| l) })
}
