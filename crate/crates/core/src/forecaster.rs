//! Feature assembly and the median-fit forecasting rule.

use std::ops::Range;

use chrono::{DateTime, Datelike, Timelike, Utc};
use log::warn;
use serde::{Deserialize, Serialize};

use crate::dataset::MarketDataset;
use crate::error::{Error, Result};
use crate::lp::{solve_weighted_l1, WeightedL1Problem};

pub const CONSTANT_COLUMN: &str = "const";
const WEEKDAYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

/// Which columns a forecasting model uses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub features: Vec<String>,
    pub include_constant: bool,
    pub include_hour_dummies: bool,
    pub include_weekday_dummies: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        Self { features: Vec::new(), include_constant: true, include_hour_dummies: false, include_weekday_dummies: false }
    }
}

impl ModelSpec {
    pub fn new<S: Into<String>>(features: impl IntoIterator<Item = S>) -> Self {
        Self { features: features.into_iter().map(Into::into).collect(), ..Self::default() }
    }

    pub fn without_constant(mut self) -> Self {
        self.include_constant = false;
        self
    }

    pub fn with_hour_dummies(mut self) -> Self {
        self.include_hour_dummies = true;
        self
    }

    pub fn with_weekday_dummies(mut self) -> Self {
        self.include_weekday_dummies = true;
        self
    }

    /// Parses an inline spec such as `f1,f2,+hour,+weekday,-const`.
    pub fn parse_inline(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            match tok {
                "+hour" => spec.include_hour_dummies = true,
                "+weekday" => spec.include_weekday_dummies = true,
                "-const" => spec.include_constant = false,
                "+const" => spec.include_constant = true,
                t if t.starts_with(['+', '-']) => {
                    return Err(Error::InvalidConfig(format!("unknown spec modifier `{t}`")));
                }
                t => spec.features.push(t.to_string()),
            }
        }
        Ok(spec)
    }

    pub fn validate(&self, dataset: &MarketDataset) -> Result<()> {
        if self.features.is_empty() && !self.include_constant && !self.include_hour_dummies && !self.include_weekday_dummies {
            return Err(Error::InvalidConfig("model spec selects no columns".into()));
        }
        for f in &self.features {
            dataset.feature(f)?;
        }
        Ok(())
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut cols = Vec::new();
        if self.include_constant {
            cols.push(CONSTANT_COLUMN.to_string());
        }
        cols.extend(self.features.iter().cloned());
        if self.include_hour_dummies {
            cols.extend((0..24).map(|h| format!("hour_{h:02}")));
        }
        if self.include_weekday_dummies {
            cols.extend(WEEKDAYS.iter().map(|d| format!("weekday_{d}")));
        }
        cols
    }
}

/// Row-major feature values with the per-column scale factors that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub timestamps: Vec<DateTime<Utc>>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Divisor applied to each column; `None` for the constant and dummy columns.
    pub scale_factors: Vec<Option<f64>>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[j])
    }
}

fn calendar_row(spec: &ModelSpec, ts: &DateTime<Utc>, out: &mut Vec<f64>) {
    if spec.include_hour_dummies {
        let h = ts.hour() as usize;
        out.extend((0..24).map(|k| if k == h { 1.0 } else { 0.0 }));
    }
    if spec.include_weekday_dummies {
        let d = ts.weekday().num_days_from_monday() as usize;
        out.extend((0..7).map(|k| if k == d { 1.0 } else { 0.0 }));
    }
}

/// Builds training and query matrices. Each named feature is divided by its
/// largest absolute value over the training rows; query rows reuse those
/// factors and so may fall outside `[0, 1]`.
pub fn assemble_features(
    dataset: &MarketDataset,
    spec: &ModelSpec,
    training_rows: Range<usize>,
    query_rows: Range<usize>,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    spec.validate(dataset)?;
    let n = dataset.len();
    if training_rows.is_empty() || training_rows.end > n || query_rows.end > n {
        return Err(Error::InvalidConfig(format!(
            "rows {training_rows:?}/{query_rows:?} out of range for dataset of length {n}"
        )));
    }

    let raw: Vec<&[f64]> = spec.features.iter().map(|f| dataset.feature(f)).collect::<Result<_>>()?;
    let factors: Vec<f64> = raw
        .iter()
        .zip(&spec.features)
        .map(|(col, name)| {
            let max = col[training_rows.clone()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if max == 0.0 {
                warn!("feature `{name}` is zero over the training window; its coefficient is fixed to 0");
                1.0
            } else {
                max
            }
        })
        .collect();

    let mut scale_factors = Vec::new();
    if spec.include_constant {
        scale_factors.push(None);
    }
    scale_factors.extend(factors.iter().map(|&f| Some(f)));
    let n_dummies = 24 * spec.include_hour_dummies as usize + 7 * spec.include_weekday_dummies as usize;
    scale_factors.extend(std::iter::repeat_n(None, n_dummies));

    let build = |range: Range<usize>| -> FeatureMatrix {
        let mut rows = Vec::with_capacity(range.len());
        let mut timestamps = Vec::with_capacity(range.len());
        for t in range {
            let ts = dataset.timestamp(t);
            let mut row = Vec::with_capacity(scale_factors.len());
            if spec.include_constant {
                row.push(1.0);
            }
            row.extend(raw.iter().zip(&factors).map(|(col, f)| col[t] / f));
            calendar_row(spec, &ts, &mut row);
            rows.push(row);
            timestamps.push(ts);
        }
        FeatureMatrix { timestamps, columns: spec.column_names(), rows, scale_factors: scale_factors.clone() }
    };
    Ok((build(training_rows), build(query_rows)))
}

/// The training span a rule was fitted on, `[start, end)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowId {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
}

impl WindowId {
    pub fn of(matrix: &FeatureMatrix) -> Self {
        let start = *matrix.timestamps.first().expect("nonempty matrix");
        let end = *matrix.timestamps.last().expect("nonempty matrix") + chrono::Duration::hours(1);
        Self { start, end }
    }
}

/// A fitted linear rule `forecast = clip(q·x, 0, 1) * capacity` on scaled features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub columns: Vec<String>,
    pub coefficients: Vec<f64>,
    pub scale_factors: Vec<Option<f64>>,
    pub capacity: f64,
    pub window: WindowId,
    /// Mean absolute deviation on the scaled training targets.
    pub objective: f64,
}

/// Median fit on training rows. `targets` are production values already
/// divided by `capacity`.
pub fn fit_forecast(train: &FeatureMatrix, targets: &[f64], capacity: f64) -> Result<DecisionRule> {
    if targets.len() != train.len() {
        return Err(Error::LengthMismatch { expected: train.len(), actual: targets.len() });
    }
    if train.is_empty() {
        return Err(Error::InsufficientHistory("empty training matrix".into()));
    }
    let problem = WeightedL1Problem::unit_weights(train.rows.clone(), targets.to_vec(), 1.0);
    let sol = solve_weighted_l1(&problem)?;
    Ok(DecisionRule {
        columns: train.columns.clone(),
        coefficients: sol.coefficients,
        scale_factors: train.scale_factors.clone(),
        capacity,
        window: WindowId::of(train),
        objective: sol.objective,
    })
}

impl DecisionRule {
    /// Unclipped linear output on a scaled row.
    pub fn linear_output(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.coefficients.len() {
            return Err(Error::ColumnMismatch(format!(
                "row has {} values, rule has {} columns",
                row.len(),
                self.coefficients.len()
            )));
        }
        Ok(self.coefficients.iter().zip(row).map(|(q, x)| q * x).sum())
    }

    /// Forecast in MWh for one scaled row.
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        Ok(self.linear_output(row)?.clamp(0.0, 1.0) * self.capacity)
    }

    pub fn predict_matrix(&self, query: &FeatureMatrix) -> Result<Vec<f64>> {
        if query.columns != self.columns {
            return Err(Error::ColumnMismatch(format!(
                "query columns {:?} differ from rule columns {:?}",
                query.columns, self.columns
            )));
        }
        if query.scale_factors != self.scale_factors {
            return Err(Error::ColumnMismatch("query was scaled with different factors".into()));
        }
        query.rows.iter().map(|r| self.predict(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// `inf { y : F(y) >= tau }` for the empirical distribution of `samples`.
pub fn empirical_quantile(samples: &[f64], tau: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::InvalidConfig(format!("fractile must lie in (0, 1), got {tau}")));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let k = (1..=sorted.len())
        .find(|&k| k as f64 / n >= tau)
        .expect("F reaches 1 at the largest sample");
    Ok(sorted[k - 1])
}
