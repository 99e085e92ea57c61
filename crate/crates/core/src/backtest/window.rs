use std::ops::Range;

use chrono::Timelike;
use serde::{Deserialize, Serialize};

use crate::dataset::MarketDataset;
use crate::error::{Error, Result};

/// Rolling-window lengths, all in days.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub training_days: usize,
    /// Days between the end of the training window and the day being predicted.
    pub gap_days: usize,
    pub retrain_every: usize,
    /// Days per "month" when lengths are given in months.
    pub month_days: usize,
    /// Training length of the trading step; defaults to `training_days`.
    pub trading_days: Option<usize>,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self { training_days: 180, gap_days: 1, retrain_every: 1, month_days: 30, trading_days: None }
    }
}

impl WindowConfig {
    pub fn days(training_days: usize, gap_days: usize) -> Self {
        Self { training_days, gap_days, ..Self::default() }
    }

    pub fn months(months: usize, gap_days: usize) -> Self {
        let base = Self::default();
        Self { training_days: months * base.month_days, gap_days, ..base }
    }

    pub fn with_trading_days(mut self, days: usize) -> Self {
        self.trading_days = Some(days);
        self
    }

    pub fn trading_length(&self) -> usize {
        self.trading_days.unwrap_or(self.training_days)
    }

    pub fn validate(&self) -> Result<()> {
        if self.training_days == 0 || self.retrain_every == 0 || self.month_days == 0 || self.trading_days == Some(0) {
            return Err(Error::InvalidConfig(
                "training length, trading length, retrain interval and month length must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Parses `30`, `30d` or `6m` into days.
    pub fn parse_length(&self, text: &str) -> Result<usize> {
        let t = text.trim();
        let (num, mult) = if let Some(n) = t.strip_suffix('m') {
            (n, self.month_days)
        } else if let Some(n) = t.strip_suffix('d') {
            (n, 1)
        } else {
            (t, 1)
        };
        num.trim()
            .parse::<usize>()
            .map(|n| n * mult)
            .map_err(|_| Error::InvalidConfig(format!("bad window length `{text}`")))
    }
}

/// Training days `[t - gap - length, t - gap)` for test day `t`, or `None`
/// if that would reach before day 0.
pub fn training_days(t_day: usize, gap: usize, length: usize) -> Option<Range<usize>> {
    let end = t_day.checked_sub(gap)?;
    let start = end.checked_sub(length)?;
    Some(start..end)
}

/// Maps whole UTC days onto dataset rows. Day 0 is the first full day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DayAxis {
    pub first_row: usize,
    pub n_days: usize,
}

impl DayAxis {
    pub fn of(dataset: &MarketDataset) -> Self {
        let hour = dataset.start.hour() as usize;
        let first_row = if hour == 0 { 0 } else { 24 - hour };
        let n_days = dataset.len().saturating_sub(first_row) / 24;
        Self { first_row, n_days }
    }

    pub fn rows(&self, day: usize) -> Range<usize> {
        let s = self.first_row + 24 * day;
        s..s + 24
    }

    pub fn rows_of(&self, days: Range<usize>) -> Range<usize> {
        self.first_row + 24 * days.start..self.first_row + 24 * days.end
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn training_window_examples() {
        assert_eq!(training_days(40, 2, 30), Some(8..38));
        assert_eq!(training_days(32, 1, 30), Some(1..31));
        assert_eq!(training_days(31, 1, 30), Some(0..30));
        assert_eq!(training_days(30, 1, 30), None);
    }

    #[test]
    fn length_parsing() {
        let w = WindowConfig::default();
        assert_eq!(w.parse_length("6m").unwrap(), 180);
        assert_eq!(w.parse_length("45d").unwrap(), 45);
        assert_eq!(w.parse_length("7").unwrap(), 7);
        assert!(w.parse_length("x").is_err());
        assert_eq!(WindowConfig::months(2, 1).training_days, 60);
    }

    #[test]
    fn zero_lengths_are_invalid() {
        assert!(WindowConfig::days(0, 1).validate().is_err());
        assert!(WindowConfig::days(5, 0).validate().is_ok());
    }
}
