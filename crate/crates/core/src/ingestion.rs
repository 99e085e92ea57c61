//! CSV loading and the synthetic market generator.
//!
//! CSV layout: a `timestamp` column in ISO-8601 UTC (`2016-02-04T00:00:00Z`)
//! followed by the schema columns in any order. Empty cells are missing
//! values. When any feature is declared quarter-hourly the file is read on a
//! 15 minute grid; hourly columns are then taken from the full-hour rows only.

use std::path::Path;

use chrono::{DateTime, Duration, SecondsFormat, TimeZone, Timelike, Utc};
use indexmap::IndexMap;
use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetSchema, FeatureColumn, MarketDataset, Resolution};
use crate::error::{Error, Result};
use crate::timeseries::{align, HourlySeries, QuarterHourSeries};

pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn parse_timestamp(text: &str) -> std::result::Result<DateTime<Utc>, String> {
    let parsed = DateTime::parse_from_rfc3339(text.trim()).map_err(|e| format!("bad timestamp `{text}`: {e}"))?;
    if parsed.offset().local_minus_utc() != 0 {
        return Err(format!("timestamp `{text}` is not in UTC"));
    }
    Ok(parsed.with_timezone(&Utc))
}

/// Per-column summary produced while loading.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadReport {
    pub data_rows: usize,
    pub hours: usize,
    pub start: String,
    pub end: String,
    /// Missing hourly values per column before gap filling.
    pub missing: IndexMap<String, usize>,
    pub clipped_target: usize,
}

pub fn load_csv(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<MarketDataset> {
    load_csv_with_report(path, schema).map(|(d, _)| d)
}

pub fn load_csv_with_report(path: impl AsRef<Path>, schema: &DatasetSchema) -> Result<(MarketDataset, LoadReport)> {
    let file = std::fs::File::open(path)?;
    read_csv(file, schema)
}

pub fn read_csv<R: std::io::Read>(reader: R, schema: &DatasetSchema) -> Result<(MarketDataset, LoadReport)> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("timestamp") {
        return Err(Error::SchemaMismatch("first column must be `timestamp`".into()));
    }

    let mut columns: Vec<(String, Resolution)> = vec![
        (schema.target.clone(), Resolution::Hourly),
        (schema.day_ahead_price.clone(), Resolution::Hourly),
        (schema.balancing_price.clone(), Resolution::Hourly),
    ];
    columns.extend(schema.features.iter().map(|f| (f.name.clone(), f.resolution)));
    let missing: Vec<&str> = columns
        .iter()
        .map(|(n, _)| n.as_str())
        .filter(|n| !headers.iter().any(|h| h == *n))
        .collect();
    if !missing.is_empty() {
        return Err(Error::SchemaMismatch(format!("missing column(s): {}", missing.join(", "))));
    }
    let positions: Vec<usize> = columns
        .iter()
        .map(|(n, _)| headers.iter().position(|h| h == n).expect("checked above"))
        .collect();

    let quarter = columns.iter().any(|(_, r)| *r == Resolution::QuarterHourly);
    let step = if quarter { Duration::minutes(15) } else { Duration::hours(1) };

    // (slot, raw cells) per data row; line numbers count the header as line 1.
    let mut first: Option<DateTime<Utc>> = None;
    let mut last: Option<DateTime<Utc>> = None;
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); columns.len()];
    let mut data_rows = 0usize;
    for (idx, record) in rdr.records().enumerate() {
        let line = idx + 2;
        let record = record.map_err(|e| Error::Parse { row: line, message: e.to_string() })?;
        let ts = parse_timestamp(record.get(0).unwrap_or_default()).map_err(|message| Error::Parse { row: line, message })?;
        if let Some(prev) = last {
            if ts <= prev {
                return Err(Error::Ordering { row: line });
            }
        }
        let origin = *first.get_or_insert(ts);
        if (ts.minute() != 0 || ts.second() != 0)
            && (!quarter || ts.minute() % 15 != 0 || ts.second() != 0) {
                return Err(Error::Parse { row: line, message: format!("timestamp {ts} is off the {}-minute grid", step.num_minutes()) });
            }
        if line == 2 && (origin.minute() != 0 || origin.second() != 0) {
            return Err(Error::Alignment("first timestamp must be on an hour boundary".into()));
        }
        last = Some(ts);
        let slot = ((ts - origin).num_minutes() / step.num_minutes()) as usize;
        let on_hour = ts.minute() == 0;
        for (c, (&pos, (name, res))) in positions.iter().zip(&columns).enumerate() {
            let raw = record.get(pos).unwrap_or_default();
            let value = if raw.is_empty() {
                None
            } else {
                Some(raw.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| Error::Parse {
                    row: line,
                    message: format!("column `{name}`: bad value `{raw}`"),
                })?)
            };
            // Hourly columns in a quarter-hour file live on their own hourly grid.
            let (target_slot, keep) = match (quarter, res) {
                (true, Resolution::Hourly) => (slot / 4, on_hour),
                _ => (slot, true),
            };
            if keep {
                let col = &mut cells[c];
                if col.len() <= target_slot {
                    col.resize(target_slot + 1, None);
                }
                col[target_slot] = value;
            }
        }
        data_rows += 1;
    }
    let origin = first.ok_or(Error::EmptySeries)?;

    let last_slot = ((last.expect("nonempty") - origin).num_minutes() / step.num_minutes()) as usize;
    let hours = if quarter { last_slot / 4 + 1 } else { last_slot + 1 };
    let mut series = Vec::with_capacity(columns.len());
    let mut missing_count = IndexMap::new();
    for (mut values, (name, res)) in cells.into_iter().zip(&columns) {
        let hourly = if quarter && *res == Resolution::QuarterHourly {
            values.resize(hours * 4, None);
            QuarterHourSeries::new(name.clone(), origin, values)?.aggregate_to_hourly()?
        } else {
            values.resize(hours, None);
            HourlySeries::new(name.clone(), origin, values)?
        };
        missing_count.insert(name.clone(), hourly.missing_count());
        let filled = hourly
            .fill_gaps()
            .map_err(|_| Error::SchemaMismatch(format!("column `{name}` has no values")))?;
        series.push(filled);
    }

    let panel = align(&series)?;
    let mut dense = panel.series.iter().map(|s| s.to_dense().expect("filled"));
    let mut target = dense.next().expect("target");
    let day_ahead = dense.next().expect("day-ahead");
    let balancing = dense.next().expect("balancing");
    let features: IndexMap<String, Vec<f64>> = schema.features.iter().map(|f| f.name.clone()).zip(dense).collect();

    let cap = schema.capacity;
    let mut clipped = 0usize;
    for e in target.iter_mut() {
        if *e > cap || *e < 0.0 {
            *e = e.clamp(0.0, cap);
            clipped += 1;
        }
    }
    if clipped > 0 {
        warn!("clipped {clipped} production value(s) to [0, {cap}]");
    }

    let dataset = MarketDataset { schema: schema.clone(), start: panel.start, target, day_ahead, balancing, features };
    let report = LoadReport {
        data_rows,
        hours: dataset.len(),
        start: format_timestamp(&dataset.start),
        end: format_timestamp(&dataset.timestamp(dataset.len().saturating_sub(1))),
        missing: missing_count,
        clipped_target: clipped,
    };
    Ok((dataset, report))
}

/// Parameters of the synthetic market generator.
///
/// Features follow independent AR(1) processes squashed into `[0, capacity]`.
/// Production is a clipped linear combination of them plus Gaussian noise;
/// the benchmark forecast is a biased, noisy copy of one feature. Balancing
/// prices deviate from the day-ahead price with a tunable sign asymmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub n_hours: usize,
    pub start: DateTime<Utc>,
    pub capacity: f64,
    /// One entry per generated feature `f1, f2, ...`.
    pub coefficients: Vec<f64>,
    /// Production noise standard deviation as a fraction of capacity.
    pub noise_scale: f64,
    /// Lag-one autocorrelation of the latent feature processes.
    pub persistence: f64,
    /// Zero-based index of the feature the benchmark copies.
    pub benchmark_feature: usize,
    pub benchmark_bias: f64,
    /// Benchmark noise standard deviation as a fraction of capacity.
    pub benchmark_noise: f64,
    pub base_price: f64,
    pub price_noise: f64,
    pub balancing_scale: f64,
    /// Probability that the balancing price settles below the day-ahead price.
    pub sign_asymmetry: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_hours: 24 * 120,
            start: Utc.with_ymd_and_hms(2016, 1, 4, 0, 0, 0).unwrap(),
            capacity: 1000.0,
            coefficients: vec![0.6, 0.4],
            noise_scale: 0.03,
            persistence: 0.97,
            benchmark_feature: 0,
            benchmark_bias: 0.1,
            benchmark_noise: 0.05,
            base_price: 40.0,
            price_noise: 5.0,
            balancing_scale: 8.0,
            sign_asymmetry: 0.5,
            seed: 1,
        }
    }
}

pub const SYNTHETIC_TARGET: &str = "production";
pub const SYNTHETIC_DAY_AHEAD: &str = "price_da";
pub const SYNTHETIC_BALANCING: &str = "price_bal";
pub const SYNTHETIC_BENCHMARK: &str = "benchmark";

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidConfig(m));
        if self.n_hours == 0 {
            return fail("n_hours must be positive".into());
        }
        if self.start.minute() != 0 || self.start.second() != 0 || self.start.nanosecond() != 0 {
            return fail("start must be on an hour boundary".into());
        }
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return fail("capacity must be positive".into());
        }
        if self.coefficients.is_empty() || self.coefficients.iter().any(|c| !c.is_finite()) {
            return fail("coefficients must be a nonempty list of finite numbers".into());
        }
        if self.benchmark_feature >= self.coefficients.len() {
            return fail(format!("benchmark_feature {} out of range", self.benchmark_feature));
        }
        for (name, v) in [
            ("noise_scale", self.noise_scale),
            ("benchmark_noise", self.benchmark_noise),
            ("price_noise", self.price_noise),
            ("balancing_scale", self.balancing_scale),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return fail(format!("{name} must be finite and nonnegative"));
            }
        }
        if !(0.0..1.0).contains(&self.persistence) {
            return fail("persistence must lie in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.sign_asymmetry) {
            return fail("sign_asymmetry must lie in [0, 1]".into());
        }
        if !self.base_price.is_finite() || !self.benchmark_bias.is_finite() {
            return fail("base_price and benchmark_bias must be finite".into());
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("synthetic config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn feature_names(&self) -> Vec<String> {
        (1..=self.coefficients.len()).map(|j| format!("f{j}")).collect()
    }

    pub fn schema(&self) -> DatasetSchema {
        let mut features: Vec<FeatureColumn> = self
            .feature_names()
            .into_iter()
            .map(|name| FeatureColumn { name, resolution: Resolution::Hourly })
            .collect();
        features.push(FeatureColumn { name: SYNTHETIC_BENCHMARK.into(), resolution: Resolution::Hourly });
        DatasetSchema {
            target: SYNTHETIC_TARGET.into(),
            day_ahead_price: SYNTHETIC_DAY_AHEAD.into(),
            balancing_price: SYNTHETIC_BALANCING.into(),
            features,
            capacity: self.capacity,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<MarketDataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k = cfg.coefficients.len();
    let cap = cfg.capacity;
    let innovation = (1.0 - cfg.persistence * cfg.persistence).sqrt();

    let mut latent: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
    let mut features: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.n_hours); k];
    let mut target = Vec::with_capacity(cfg.n_hours);
    let mut benchmark = Vec::with_capacity(cfg.n_hours);
    let mut day_ahead = Vec::with_capacity(cfg.n_hours);
    let mut balancing = Vec::with_capacity(cfg.n_hours);

    for t in 0..cfg.n_hours {
        for (j, z) in latent.iter_mut().enumerate() {
            if t > 0 {
                let eps: f64 = rng.sample(StandardNormal);
                *z = cfg.persistence * *z + innovation * eps;
            }
            features[j].push(cap * sigmoid(1.5 * *z));
        }
        let noise: f64 = rng.sample(StandardNormal);
        let mean: f64 = cfg.coefficients.iter().zip(&features).map(|(c, f)| c * f[t]).sum();
        target.push((mean + cfg.noise_scale * cap * noise).clamp(0.0, cap));

        let bench_noise: f64 = rng.sample(StandardNormal);
        let source = features[cfg.benchmark_feature][t];
        benchmark.push(((1.0 + cfg.benchmark_bias) * source + cfg.benchmark_noise * cap * bench_noise).clamp(0.0, cap));

        let hour = cfg.start.hour() as f64 + t as f64;
        let shape = 0.25 * cfg.base_price * (2.0 * std::f64::consts::PI * (hour - 6.0) / 24.0).sin();
        let price_noise: f64 = rng.sample(StandardNormal);
        let lambda_d = cfg.base_price + shape + cfg.price_noise * price_noise;
        let below = rng.gen_bool(cfg.sign_asymmetry);
        let dev: f64 = rng.sample::<f64, _>(StandardNormal).abs() * cfg.balancing_scale;
        day_ahead.push(lambda_d);
        balancing.push(if below { lambda_d - dev } else { lambda_d + dev });
    }

    let mut columns: IndexMap<String, Vec<f64>> = cfg.feature_names().into_iter().zip(features).collect();
    columns.insert(SYNTHETIC_BENCHMARK.into(), benchmark);
    Ok(MarketDataset { schema: cfg.schema(), start: cfg.start, target, day_ahead, balancing, features: columns })
}
