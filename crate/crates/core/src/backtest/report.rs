use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::engine::{BacktestReport, Mode, BENCHMARK, FORECAST, MODEL};
use super::metrics::{Metrics, Reductions};
use super::tune::TuneReport;
use crate::error::Result;
use crate::ingestion::format_timestamp;
use crate::settlement::opportunity_loss;

pub const HISTOGRAM_BIN: f64 = 0.05;

#[derive(Serialize)]
struct Summary<'a> {
    mode: Mode,
    capacity: f64,
    test_days: usize,
    test_hours: usize,
    strategies: &'a [String],
    columns: &'a [String],
    aggregates: &'a indexmap::IndexMap<String, Metrics>,
    reductions: &'a indexmap::IndexMap<String, Reductions>,
    skipped: &'a [super::engine::SkippedDay],
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_writer(fs::File::create(path)?))
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Writes every report file into `dir`, creating it if needed, and returns the
/// paths written.
pub fn write_report(report: &BacktestReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let path = dir.join("summary.json");
    let summary = Summary {
        mode: report.mode,
        capacity: report.capacity,
        test_days: report.test_days,
        test_hours: report.hours.len(),
        strategies: &report.strategies,
        columns: &report.columns,
        aggregates: &report.aggregates,
        reductions: &report.reductions,
        skipped: &report.skipped,
    };
    fs::write(&path, serde_json::to_string_pretty(&summary)? + "\n")?;
    written.push(path);

    written.push(write_hourly(report, dir)?);
    written.push(write_trace(report, dir)?);
    written.push(write_coefficients(report, dir)?);
    written.push(write_cumulative(report, dir)?);
    if report.mode == Mode::Trade {
        written.push(write_a_vs_fractile(report, dir)?);
        written.push(write_histogram(report, dir)?);
    }
    Ok(written)
}

fn write_hourly(report: &BacktestReport, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("hourly.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["timestamp".to_string(), "day".into(), "actual".into(), "psi_minus".into(), "psi_plus".into()];
    header.extend(report.strategies.iter().cloned());
    header.extend(report.strategies.iter().map(|s| format!("loss_{s}")));
    w.write_record(&header)?;
    for h in &report.hours {
        let mut rec = vec![format_timestamp(&h.timestamp), h.day.to_string(), num(h.actual), num(h.psi_minus), num(h.psi_plus)];
        rec.extend(h.values.iter().map(|&v| num(v)));
        rec.extend(h.values.iter().map(|&v| num(opportunity_loss(h.actual, v, h.psi_minus, h.psi_plus))));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_trace(report: &BacktestReport, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("forecast_trace.csv");
    let model = match report.mode {
        Mode::Forecast => MODEL,
        Mode::Trade => FORECAST,
    };
    let k = report.strategy_index(model).expect("model strategy present");
    let b = report.strategy_index(BENCHMARK).expect("benchmark strategy present");
    let mut w = csv_writer(&path)?;
    w.write_record(["timestamp", "actual", "benchmark", "forecast", "error"])?;
    for h in &report.hours {
        w.write_record([
            format_timestamp(&h.timestamp),
            num(h.actual),
            num(h.values[b]),
            num(h.values[k]),
            num(h.values[k] - h.actual),
        ])?;
    }
    w.flush()?;
    Ok(path)
}

fn write_coefficients(report: &BacktestReport, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("coefficients.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["day".to_string(), "train_start".into(), "train_end".into(), "objective".into()];
    header.extend(report.columns.iter().cloned());
    w.write_record(&header)?;
    for d in &report.windows {
        let mut rec = vec![d.day.to_string(), format_timestamp(&d.train_start), format_timestamp(&d.train_end), num(d.forecast_objective)];
        rec.extend(d.coefficients.iter().map(|&c| num(c)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_cumulative(report: &BacktestReport, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("cumulative_loss.csv");
    let mut w = csv_writer(&path)?;
    let mut header = vec!["timestamp".to_string()];
    header.extend(report.strategies.iter().cloned());
    w.write_record(&header)?;
    let mut totals = vec![0.0; report.strategies.len()];
    for h in &report.hours {
        for (t, &v) in totals.iter_mut().zip(&h.values) {
            *t += opportunity_loss(h.actual, v, h.psi_minus, h.psi_plus);
        }
        let mut rec = vec![format_timestamp(&h.timestamp)];
        rec.extend(totals.iter().map(|&t| num(t)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(path)
}

fn write_a_vs_fractile(report: &BacktestReport, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("a_vs_fractile.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["day", "a", "fractile"])?;
    for d in &report.windows {
        w.write_record([d.day.to_string(), opt(d.a), opt(d.fractile)])?;
    }
    w.flush()?;
    Ok(path)
}

/// Counts of fitted multipliers in bins `[k*w, (k+1)*w)` of width [`HISTOGRAM_BIN`].
pub fn a_histogram(values: &[f64]) -> Vec<(f64, f64, usize)> {
    let mut bins: std::collections::BTreeMap<i64, usize> = std::collections::BTreeMap::new();
    for &a in values {
        *bins.entry((a / HISTOGRAM_BIN).floor() as i64).or_default() += 1;
    }
    bins.into_iter().map(|(k, n)| (k as f64 * HISTOGRAM_BIN, (k + 1) as f64 * HISTOGRAM_BIN, n)).collect()
}

fn write_histogram(report: &BacktestReport, dir: &Path) -> Result<PathBuf> {
    let path = dir.join("a_histogram.csv");
    let values: Vec<f64> = report.windows.iter().filter_map(|d| d.a).collect();
    let mut w = csv_writer(&path)?;
    w.write_record(["bin_start", "bin_end", "count"])?;
    for (lo, hi, n) in a_histogram(&values) {
        w.write_record([format!("{lo:.2}"), format!("{hi:.2}"), n.to_string()])?;
    }
    w.flush()?;
    Ok(path)
}

/// Writes `tuning.csv` and `tuning.json` into `dir`.
pub fn write_tuning(tune: &TuneReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let csv_path = dir.join("tuning.csv");
    let mut w = csv_writer(&csv_path)?;
    w.write_record(["length_days", "available", "mae_reduction", "rmse_reduction", "aol_reduction", "score", "selected"])?;
    for e in &tune.entries {
        let r = e.reductions;
        w.write_record([
            e.length_days.to_string(),
            e.available.to_string(),
            opt(r.and_then(|r| r.mae)),
            opt(r.and_then(|r| r.rmse)),
            opt(r.and_then(|r| r.aol)),
            opt(e.score),
            (Some(e.length_days) == tune.selected).to_string(),
        ])?;
    }
    w.flush()?;
    let json_path = dir.join("tuning.json");
    fs::write(&json_path, serde_json::to_string_pretty(tune)? + "\n")?;
    Ok(vec![csv_path, json_path])
}
