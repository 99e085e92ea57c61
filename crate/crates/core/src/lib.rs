//! Feature-driven newsvendor forecasting and trading for renewable producers.
//!
//! A median-fit linear rule forecasts hourly production from features; a single
//! multiplier then turns the forecast into a day-ahead bid that accounts for
//! asymmetric balancing costs. Rolling-window backtests compare both steps
//! against a benchmark forecast.

pub mod backtest;
pub mod dataset;
pub mod error;
pub mod forecaster;
pub mod ingestion;
pub mod lp;
pub mod settlement;
pub mod timeseries;
pub mod trader;

pub use error::{Error, ErrorKind, Result};
