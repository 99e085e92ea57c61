//! Rolling-window backtests, window tuning and report files.

mod engine;
mod metrics;
mod report;
mod tune;
mod window;

pub use engine::{
    costs, run_backtest, run_forecast_backtest, run_trading_backtest, BacktestConfig, BacktestReport, CostSource,
    HourRecord, Mode, SkippedDay, WindowDiagnostic, BENCHMARK, FORECAST, MODEL, TWO_STEP,
};
pub use metrics::{compute_metrics, reduction, Metrics, Reductions};
pub use report::{a_histogram, write_report, write_tuning, HISTOGRAM_BIN};
pub use tune::{tune_window_length, TuneEntry, TuneReport};
pub use window::{training_days, DayAxis, WindowConfig};
