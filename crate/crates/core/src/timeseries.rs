//! Hourly and quarter-hourly series on an implicit UTC time axis.
//!
//! A series stores its first timestamp and a dense vector of optional values;
//! entry `i` belongs to `start + i * step`. Gaps in a source file are
//! represented as `None` rather than as skipped timestamps.

use chrono::{DateTime, Duration, Timelike, Utc};

use crate::error::{Error, Result};

/// A UTC-stamped hourly sequence with explicit missing markers.
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    pub name: String,
    start: DateTime<Utc>,
    values: Vec<Option<f64>>,
}

/// Same layout as [`HourlySeries`] with a 15 minute step.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterHourSeries {
    pub name: String,
    start: DateTime<Utc>,
    values: Vec<Option<f64>>,
}

fn is_hour_aligned(ts: &DateTime<Utc>) -> bool {
    ts.minute() == 0 && ts.second() == 0 && ts.nanosecond() == 0
}

fn is_quarter_aligned(ts: &DateTime<Utc>) -> bool {
    ts.minute().is_multiple_of(15) && ts.second() == 0 && ts.nanosecond() == 0
}

impl HourlySeries {
    pub fn new(name: impl Into<String>, start: DateTime<Utc>, values: Vec<Option<f64>>) -> Result<Self> {
        if !is_hour_aligned(&start) {
            return Err(Error::Alignment(format!("hourly series must start on an hour boundary, got {start}")));
        }
        Ok(Self { name: name.into(), start, values })
    }

    /// Convenience constructor for a series without gaps.
    pub fn from_values(name: impl Into<String>, start: DateTime<Utc>, values: Vec<f64>) -> Result<Self> {
        Self::new(name, start, values.into_iter().map(Some).collect())
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    /// Timestamp one hour past the last entry.
    pub fn end(&self) -> DateTime<Utc> {
        self.start + Duration::hours(self.values.len() as i64)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    pub fn timestamp(&self, index: usize) -> DateTime<Utc> {
        self.start + Duration::hours(index as i64)
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    /// Dense values, or `None` if any entry is still missing.
    pub fn to_dense(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }

    /// Interior gaps are linearly interpolated between their neighbours;
    /// leading and trailing gaps take the nearest observed value.
    pub fn fill_gaps(&self) -> Result<HourlySeries> {
        Ok(HourlySeries {
            name: self.name.clone(),
            start: self.start,
            values: fill_values(&self.values)?.into_iter().map(Some).collect(),
        })
    }

    /// Sub-range `[from, to)` in hours relative to `start`.
    pub fn slice(&self, from: usize, to: usize) -> HourlySeries {
        HourlySeries {
            name: self.name.clone(),
            start: self.timestamp(from),
            values: self.values[from..to].to_vec(),
        }
    }
}

impl QuarterHourSeries {
    pub fn new(name: impl Into<String>, start: DateTime<Utc>, values: Vec<Option<f64>>) -> Result<Self> {
        if !is_quarter_aligned(&start) {
            return Err(Error::Alignment(format!("quarter-hour series must start on a 15 minute boundary, got {start}")));
        }
        Ok(Self { name: name.into(), start, values })
    }

    pub fn start(&self) -> DateTime<Utc> {
        self.start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Option<f64>] {
        &self.values
    }

    /// Mean of the present quarter-hours of each hour. An hour with no
    /// observation at all stays missing.
    pub fn aggregate_to_hourly(&self) -> Result<HourlySeries> {
        if !is_hour_aligned(&self.start) {
            return Err(Error::Alignment(format!(
                "quarter-hour series must start on an hour boundary to aggregate, got {}",
                self.start
            )));
        }
        if !self.values.len().is_multiple_of(4) {
            return Err(Error::Alignment(format!(
                "quarter-hour series length {} is not a multiple of 4",
                self.values.len()
            )));
        }
        let hourly = self
            .values
            .chunks_exact(4)
            .map(|quarter| {
                let present: Vec<f64> = quarter.iter().flatten().copied().collect();
                if present.is_empty() {
                    None
                } else {
                    Some(present.iter().sum::<f64>() / present.len() as f64)
                }
            })
            .collect();
        HourlySeries::new(self.name.clone(), self.start, hourly)
    }
}

fn fill_values(values: &[Option<f64>]) -> Result<Vec<f64>> {
    let observed: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|x| (i, x)))
        .collect();
    let (&(first_idx, first_val), &(last_idx, last_val)) = match (observed.first(), observed.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptySeries),
    };

    let mut out = vec![0.0; values.len()];
    out[..=first_idx].fill(first_val);
    out[last_idx..].fill(last_val);
    for pair in observed.windows(2) {
        let (i0, v0) = pair[0];
        let (i1, v1) = pair[1];
        out[i0] = v0;
        let span = (i1 - i0) as f64;
        for (k, slot) in out.iter_mut().enumerate().take(i1).skip(i0 + 1) {
            let w = (k - i0) as f64 / span;
            *slot = v0 + (v1 - v0) * w;
        }
    }
    Ok(out)
}

/// Several hourly series trimmed to their common time range.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedPanel {
    pub start: DateTime<Utc>,
    pub len: usize,
    pub series: Vec<HourlySeries>,
}

impl AlignedPanel {
    pub fn get(&self, name: &str) -> Option<&HourlySeries> {
        self.series.iter().find(|s| s.name == name)
    }
}

/// Trims every series to the maximal common hour range.
pub fn align(series: &[HourlySeries]) -> Result<AlignedPanel> {
    if series.is_empty() {
        return Err(Error::NoOverlap);
    }
    let start = series.iter().map(HourlySeries::start).max().expect("nonempty");
    let end = series.iter().map(HourlySeries::end).min().expect("nonempty");
    if end <= start {
        return Err(Error::NoOverlap);
    }
    let len = (end - start).num_hours() as usize;
    let trimmed = series
        .iter()
        .map(|s| {
            let offset = (start - s.start()).num_hours() as usize;
            s.slice(offset, offset + len)
        })
        .collect();
    Ok(AlignedPanel { start, len, series: trimmed })
}
