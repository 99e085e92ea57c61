use chrono::{DateTime, Duration, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::settlement::{derive_settlement, SettlementRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    #[default]
    Hourly,
    QuarterHourly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    #[serde(default)]
    pub resolution: Resolution,
}

/// Column roles of a market CSV and the production capacity used for scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub target: String,
    pub day_ahead_price: String,
    pub balancing_price: String,
    pub features: Vec<FeatureColumn>,
    /// Maximum hourly production in MWh.
    pub capacity: f64,
}

impl DatasetSchema {
    pub fn validate(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::InvalidConfig("schema needs at least one feature column".into()));
        }
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return Err(Error::InvalidConfig(format!("capacity must be positive, got {}", self.capacity)));
        }
        let mut names: Vec<&str> = vec![&self.target, &self.day_ahead_price, &self.balancing_price];
        names.extend(self.features.iter().map(|f| f.name.as_str()));
        if names.iter().any(|n| n.is_empty() || *n == "timestamp") {
            return Err(Error::InvalidConfig("column names must be nonempty and not `timestamp`".into()));
        }
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(Error::InvalidConfig("schema column names must be distinct".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let schema: Self = toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("schema: {e}")))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("schema serializes")
    }
}

/// Hour-aligned panel of production, prices and feature series.
///
/// Row `i` is the hour starting at `start + i h`. All vectors have the same
/// length and contain no missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketDataset {
    pub schema: DatasetSchema,
    pub start: DateTime<Utc>,
    pub target: Vec<f64>,
    pub day_ahead: Vec<f64>,
    pub balancing: Vec<f64>,
    pub features: IndexMap<String, Vec<f64>>,
}

impl MarketDataset {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn capacity(&self) -> f64 {
        self.schema.capacity
    }

    pub fn timestamp(&self, row: usize) -> DateTime<Utc> {
        self.start + Duration::hours(row as i64)
    }

    pub fn feature(&self, name: &str) -> Result<&[f64]> {
        self.features
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::ColumnMismatch(format!("dataset has no feature `{name}`")))
    }

    pub fn feature_mut(&mut self, name: &str) -> Result<&mut Vec<f64>> {
        self.features
            .get_mut(name)
            .ok_or_else(|| Error::ColumnMismatch(format!("dataset has no feature `{name}`")))
    }

    pub fn settlement(&self, row: usize) -> Result<SettlementRecord> {
        derive_settlement(self.day_ahead[row], self.balancing[row])
    }

    pub fn settlements(&self) -> Result<Vec<SettlementRecord>> {
        (0..self.len()).map(|i| self.settlement(i)).collect()
    }

    /// Checks lengths and the production range.
    pub fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let n = self.len();
        for (name, len) in [("day-ahead price", self.day_ahead.len()), ("balancing price", self.balancing.len())] {
            if len != n {
                return Err(Error::Alignment(format!("{name} has {len} rows, target has {n}")));
            }
        }
        for (name, col) in &self.features {
            if col.len() != n {
                return Err(Error::Alignment(format!("feature {name} has {} rows, target has {n}", col.len())));
            }
        }
        let cap = self.capacity();
        if let Some(i) = self.target.iter().position(|e| !(0.0..=cap).contains(e)) {
            return Err(Error::InvalidConfig(format!(
                "production {} at {} is outside [0, {cap}]",
                self.target[i],
                self.timestamp(i)
            )));
        }
        Ok(())
    }

    /// Writes the dataset as an hourly CSV matching its schema.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![
            "timestamp".to_string(),
            self.schema.target.clone(),
            self.schema.day_ahead_price.clone(),
            self.schema.balancing_price.clone(),
        ];
        header.extend(self.features.keys().cloned());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec = vec![
                crate::ingestion::format_timestamp(&self.timestamp(i)),
                self.target[i].to_string(),
                self.day_ahead[i].to_string(),
                self.balancing[i].to_string(),
            ];
            rec.extend(self.features.values().map(|c| c[i].to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}
