use std::collections::HashMap;
use std::ops::Range;
use std::sync::Arc;

use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{compute_metrics, Metrics, Reductions};
use super::window::{training_days, DayAxis, WindowConfig};
use crate::dataset::MarketDataset;
use crate::error::{Error, Result};
use crate::forecaster::{assemble_features, fit_forecast, DecisionRule, ModelSpec};
use crate::trader::{bid, critical_fractile, fit_trading, TradingRule};

pub const BENCHMARK: &str = "benchmark";
pub const MODEL: &str = "model";
pub const FORECAST: &str = "forecast";
pub const TWO_STEP: &str = "two_step";

/// Where the per-hour opportunity costs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostSource {
    /// Derived from day-ahead and balancing prices.
    #[default]
    Prices,
    /// `psi_minus = psi_plus = 1` everywhere, which turns AOL into MAE.
    Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Forecast,
    Trade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestConfig {
    pub window: WindowConfig,
    /// Feature column holding the benchmark forecast.
    pub benchmark: String,
    pub costs: CostSource,
    /// Test days, counted from the first full UTC day of the dataset.
    pub test_days: Option<Range<usize>>,
    /// Worker threads for window fits; 0 uses all cores.
    pub jobs: usize,
}

impl BacktestConfig {
    pub fn new(window: WindowConfig, benchmark: impl Into<String>) -> Self {
        Self { window, benchmark: benchmark.into(), costs: CostSource::Prices, test_days: None, jobs: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HourRecord {
    pub timestamp: DateTime<Utc>,
    pub day: usize,
    pub actual: f64,
    pub psi_minus: f64,
    pub psi_plus: f64,
    /// One value per strategy, in report order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDiagnostic {
    pub day: usize,
    pub train_start: DateTime<Utc>,
    pub train_end: DateTime<Utc>,
    pub coefficients: Vec<f64>,
    pub forecast_objective: f64,
    pub a: Option<f64>,
    pub fractile: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedDay {
    pub day: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub mode: Mode,
    pub capacity: f64,
    pub strategies: Vec<String>,
    /// Column names of the forecasting rule.
    pub columns: Vec<String>,
    pub hours: Vec<HourRecord>,
    pub windows: Vec<WindowDiagnostic>,
    pub aggregates: IndexMap<String, Metrics>,
    /// Percentage reductions of every non-benchmark strategy.
    pub reductions: IndexMap<String, Reductions>,
    pub test_days: usize,
    pub skipped: Vec<SkippedDay>,
}

impl BacktestReport {
    pub fn strategy_index(&self, name: &str) -> Option<usize> {
        self.strategies.iter().position(|s| s == name)
    }

    pub fn values_of(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.strategy_index(name)?;
        Some(self.hours.iter().map(|h| h.values[k]).collect())
    }

    /// The strategy measured against the benchmark in headline numbers.
    pub fn headline(&self) -> &str {
        match self.mode {
            Mode::Forecast => MODEL,
            Mode::Trade => TWO_STEP,
        }
    }

    /// Recomputes the aggregates from the per-hour records.
    pub fn recompute_aggregates(&self) -> Result<IndexMap<String, Metrics>> {
        let actual: Vec<f64> = self.hours.iter().map(|h| h.actual).collect();
        let pm: Vec<f64> = self.hours.iter().map(|h| h.psi_minus).collect();
        let pp: Vec<f64> = self.hours.iter().map(|h| h.psi_plus).collect();
        self.strategies
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let pred: Vec<f64> = self.hours.iter().map(|h| h.values[k]).collect();
                Ok((s.clone(), compute_metrics(&actual, &pred, &pm, &pp)?))
            })
            .collect()
    }
}

pub fn costs(dataset: &MarketDataset, source: CostSource) -> Result<(Vec<f64>, Vec<f64>)> {
    match source {
        CostSource::Unit => Ok((vec![1.0; dataset.len()], vec![1.0; dataset.len()])),
        CostSource::Prices => {
            let records = dataset.settlements()?;
            Ok((records.iter().map(|r| r.psi_minus).collect(), records.iter().map(|r| r.psi_plus).collect()))
        }
    }
}

fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// Consecutive days `[from, to)` grouped by the day whose window they share.
fn retrain_groups(days: Range<usize>, every: usize) -> Vec<Range<usize>> {
    days.clone()
        .step_by(every)
        .map(|anchor| anchor..(anchor + every).min(days.end))
        .collect()
}

struct ForecastBlock {
    rule: DecisionRule,
    /// Predictions in MWh for each day of the block, 24 per day.
    predictions: Vec<f64>,
}

fn forecast_block(
    dataset: &MarketDataset,
    spec: &ModelSpec,
    axis: &DayAxis,
    window: &WindowConfig,
    days: &Range<usize>,
) -> Result<ForecastBlock> {
    let train_days = training_days(days.start, window.gap_days, window.training_days)
        .ok_or_else(|| Error::InsufficientHistory(format!("day {} has no full forecasting window", days.start)))?;
    let train_rows = axis.rows_of(train_days);
    let query_rows = axis.rows_of(days.clone());
    let (train, query) = assemble_features(dataset, spec, train_rows.clone(), query_rows)?;
    let cap = dataset.capacity();
    let targets: Vec<f64> = dataset.target[train_rows].iter().map(|e| e / cap).collect();
    let rule = fit_forecast(&train, &targets, cap)?;
    let predictions = rule.predict_matrix(&query)?;
    Ok(ForecastBlock { rule, predictions })
}

/// A day's forecasting rule and its 24 predictions, or why the fit failed.
type DayForecast = std::result::Result<(Arc<DecisionRule>, Vec<f64>), String>;

/// Out-of-sample forecasts for every day in `days`, keyed by day.
fn rolling_forecasts(
    dataset: &MarketDataset,
    spec: &ModelSpec,
    axis: &DayAxis,
    window: &WindowConfig,
    days: Range<usize>,
    jobs: usize,
) -> Result<HashMap<usize, DayForecast>> {
    let groups = retrain_groups(days, window.retrain_every);
    let blocks: Vec<(Range<usize>, Result<ForecastBlock>)> = with_pool(jobs, || {
        groups
            .par_iter()
            .map(|g| (g.clone(), forecast_block(dataset, spec, axis, window, g)))
            .collect()
    })?;
    let mut out = HashMap::new();
    for (g, block) in blocks {
        match block {
            Ok(b) => {
                let rule = Arc::new(b.rule);
                for (k, day) in g.clone().enumerate() {
                    out.insert(day, Ok((rule.clone(), b.predictions[24 * k..24 * (k + 1)].to_vec())));
                }
            }
            Err(e) => {
                for day in g {
                    out.insert(day, Err(e.to_string()));
                }
            }
        }
    }
    Ok(out)
}

fn test_range(config: &BacktestConfig, axis: &DayAxis, min_day: usize, skipped: &mut Vec<SkippedDay>) -> Range<usize> {
    let requested = config.test_days.clone().unwrap_or(0..axis.n_days);
    let end = requested.end.min(axis.n_days);
    let start = requested.start.min(end);
    for day in start..min_day.min(end) {
        skipped.push(SkippedDay { day, reason: "insufficient history".into() });
    }
    if min_day > start {
        warn!("skipping {} test day(s) without enough history", min_day.min(end) - start);
    }
    start.max(min_day).min(end)..end
}

fn finish(
    mode: Mode,
    dataset: &MarketDataset,
    strategies: Vec<String>,
    columns: Vec<String>,
    hours: Vec<HourRecord>,
    windows: Vec<WindowDiagnostic>,
    skipped: Vec<SkippedDay>,
) -> Result<BacktestReport> {
    if hours.is_empty() {
        return Err(Error::InsufficientHistory("no test day could be evaluated".into()));
    }
    let test_days = hours.len() / 24;
    let mut report = BacktestReport {
        mode,
        capacity: dataset.capacity(),
        strategies,
        columns,
        hours,
        windows,
        aggregates: IndexMap::new(),
        reductions: IndexMap::new(),
        test_days,
        skipped,
    };
    report.aggregates = report.recompute_aggregates()?;
    let bench = report.aggregates[BENCHMARK];
    report.reductions = report
        .aggregates
        .iter()
        .filter(|(k, _)| k.as_str() != BENCHMARK)
        .map(|(k, m)| (k.clone(), Reductions::between(&bench, m)))
        .collect();
    Ok(report)
}

fn validate_inputs(dataset: &MarketDataset, spec: &ModelSpec, config: &BacktestConfig) -> Result<()> {
    config.window.validate()?;
    spec.validate(dataset)?;
    dataset.feature(&config.benchmark)?;
    Ok(())
}

/// Rolling-window forecasting backtest: for each test day, fit the median rule
/// on its training window and forecast the day's 24 hours.
pub fn run_forecast_backtest(dataset: &MarketDataset, spec: &ModelSpec, config: &BacktestConfig) -> Result<BacktestReport> {
    validate_inputs(dataset, spec, config)?;
    let axis = DayAxis::of(dataset);
    let w = &config.window;
    let mut skipped = Vec::new();
    let days = test_range(config, &axis, w.training_days + w.gap_days, &mut skipped);
    let (psi_minus, psi_plus) = costs(dataset, config.costs)?;
    let benchmark = dataset.feature(&config.benchmark)?;

    let forecasts = rolling_forecasts(dataset, spec, &axis, w, days.clone(), config.jobs)?;
    let mut hours = Vec::new();
    let mut windows = Vec::new();
    let mut last_rule: Option<*const DecisionRule> = None;
    for day in days {
        match &forecasts[&day] {
            Err(reason) => {
                warn!("day {day} skipped: {reason}");
                skipped.push(SkippedDay { day, reason: reason.clone() });
            }
            Ok((rule, preds)) => {
                if last_rule != Some(Arc::as_ptr(rule)) {
                    last_rule = Some(Arc::as_ptr(rule));
                    windows.push(WindowDiagnostic {
                        day,
                        train_start: rule.window.start,
                        train_end: rule.window.end,
                        coefficients: rule.coefficients.clone(),
                        forecast_objective: rule.objective,
                        a: None,
                        fractile: None,
                    });
                }
                for (k, row) in axis.rows(day).enumerate() {
                    hours.push(HourRecord {
                        timestamp: dataset.timestamp(row),
                        day,
                        actual: dataset.target[row],
                        psi_minus: psi_minus[row],
                        psi_plus: psi_plus[row],
                        values: vec![benchmark[row], preds[k]],
                    });
                }
            }
        }
    }
    skipped.sort_by_key(|s| s.day);
    finish(Mode::Forecast, dataset, vec![BENCHMARK.into(), MODEL.into()], spec.column_names(), hours, windows, skipped)
}

/// Two-step trading backtest. The improved forecast is produced out of sample
/// for every day; the bid multiplier for a test day is then fitted on the
/// improved forecasts, outcomes and opportunity costs of its trading window.
pub fn run_trading_backtest(dataset: &MarketDataset, spec: &ModelSpec, config: &BacktestConfig) -> Result<BacktestReport> {
    validate_inputs(dataset, spec, config)?;
    let axis = DayAxis::of(dataset);
    let w = &config.window;
    let first_forecast_day = w.training_days + w.gap_days;
    let min_day = first_forecast_day + w.trading_length() + w.gap_days;
    let mut skipped = Vec::new();
    let days = test_range(config, &axis, min_day, &mut skipped);
    let (psi_minus, psi_plus) = costs(dataset, config.costs)?;
    let benchmark = dataset.feature(&config.benchmark)?;
    let cap = dataset.capacity();

    let needed_from = days.start.saturating_sub(w.gap_days + w.trading_length()).max(first_forecast_day);
    let forecasts = rolling_forecasts(dataset, spec, &axis, w, needed_from..days.end.max(needed_from), config.jobs)?;

    let groups = retrain_groups(days.clone(), w.retrain_every);
    let fits: Vec<std::result::Result<(TradingRule, Option<f64>), String>> = with_pool(config.jobs, || {
        groups
            .par_iter()
            .map(|g| {
                let train = training_days(g.start, w.gap_days, w.trading_length())
                    .ok_or_else(|| "no full trading window".to_string())?;
                let mut fc = Vec::with_capacity(24 * train.len());
                for d in train.clone() {
                    match forecasts.get(&d) {
                        Some(Ok((_, p))) => fc.extend_from_slice(p),
                        Some(Err(e)) => return Err(format!("forecast for trading-window day {d} failed: {e}")),
                        None => return Err(format!("no forecast for trading-window day {d}")),
                    }
                }
                let rows = axis.rows_of(train);
                let rule = fit_trading(&fc, &dataset.target[rows.clone()], &psi_minus[rows.clone()], &psi_plus[rows.clone()])
                    .map_err(|e| e.to_string())?;
                let fractile = critical_fractile(&psi_minus[rows.clone()], &psi_plus[rows]).ok();
                Ok((rule, fractile))
            })
            .collect()
    })?;

    let mut hours = Vec::new();
    let mut windows = Vec::new();
    for (g, fit) in groups.iter().zip(fits) {
        for day in g.clone() {
            let outcome = match (&fit, &forecasts[&day]) {
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                (Ok(f), Ok(fc)) => Ok((f, fc)),
            };
            let ((rule, fractile), (frule, preds)) = match outcome {
                Ok(v) => v,
                Err(reason) => {
                    warn!("day {day} skipped: {reason}");
                    skipped.push(SkippedDay { day, reason });
                    continue;
                }
            };
            if day == g.start {
                windows.push(WindowDiagnostic {
                    day,
                    train_start: frule.window.start,
                    train_end: frule.window.end,
                    coefficients: frule.coefficients.clone(),
                    forecast_objective: frule.objective,
                    a: Some(rule.a),
                    fractile: *fractile,
                });
            }
            for (k, row) in axis.rows(day).enumerate() {
                hours.push(HourRecord {
                    timestamp: dataset.timestamp(row),
                    day,
                    actual: dataset.target[row],
                    psi_minus: psi_minus[row],
                    psi_plus: psi_plus[row],
                    values: vec![benchmark[row], preds[k], bid(rule, preds[k], cap)],
                });
            }
        }
    }
    skipped.sort_by_key(|s| s.day);
    finish(
        Mode::Trade,
        dataset,
        vec![BENCHMARK.into(), FORECAST.into(), TWO_STEP.into()],
        spec.column_names(),
        hours,
        windows,
        skipped,
    )
}

pub fn run_backtest(mode: Mode, dataset: &MarketDataset, spec: &ModelSpec, config: &BacktestConfig) -> Result<BacktestReport> {
    match mode {
        Mode::Forecast => run_forecast_backtest(dataset, spec, config),
        Mode::Trade => run_trading_backtest(dataset, spec, config),
    }
}
