mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use newsvendor::backtest::{
    run_backtest, tune_window_length, write_report, write_tuning, BacktestConfig, BacktestReport, CostSource, Mode,
    WindowConfig,
};
use newsvendor::dataset::{DatasetSchema, MarketDataset};
use newsvendor::forecaster::ModelSpec;
use newsvendor::ingestion::{generate_synthetic, load_csv_with_report, SyntheticConfig, SYNTHETIC_BENCHMARK};
use newsvendor::{Error, ErrorKind, Result};

use config::{parse_day_range, FileConfig};

#[derive(Parser)]
#[command(name = "newsvendor", version, about = "Feature-driven newsvendor forecasting and day-ahead bidding")]
struct Cli {
    /// TOML file with default values for any flag; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset against its schema and summarize it.
    Validate(DataArgs),
    /// Generate a synthetic market dataset and its schema.
    Synth(SynthArgs),
    /// Run a rolling-window backtest and write the report files.
    Backtest(RunArgs),
    /// Compare window lengths on a validation range.
    Tune(TuneArgs),
}

#[derive(Args, Clone, Default)]
struct DataArgs {
    /// Market CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema TOML describing the CSV columns.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Synthetic generator TOML instead of a CSV, or `default`.
    #[arg(long, conflicts_with = "data")]
    synthetic: Option<String>,
    /// Seed override for the synthetic generator.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator TOML; omit for the built-in defaults.
    #[arg(long)]
    synthetic: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_hours: Option<usize>,
    /// Output CSV; the schema is written next to it as `<out>.schema.toml`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Forecast,
    Trade,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Forecast => Mode::Forecast,
            ModeArg::Trade => Mode::Trade,
        }
    }
}

#[derive(Args, Clone)]
struct WindowArgs {
    /// Model spec: a name from the config file's `[models]` table or an inline
    /// list such as `f1,f2,+hour,-const`. Defaults to every feature column.
    #[arg(long)]
    spec: Option<String>,
    /// Forecasting window length: `180`, `180d` or `6m`.
    #[arg(long)]
    window_days: Option<String>,
    #[arg(long)]
    gap_days: Option<usize>,
    /// Trading window length; defaults to the forecasting window.
    #[arg(long)]
    trade_window_days: Option<String>,
    #[arg(long)]
    retrain_every: Option<usize>,
    /// Days per month for lengths given as `Nm`.
    #[arg(long)]
    month_days: Option<usize>,
    /// Feature column holding the benchmark forecast.
    #[arg(long)]
    benchmark: Option<String>,
    /// Use unit opportunity costs instead of prices.
    #[arg(long)]
    unit_costs: bool,
    /// Maximum concurrent window fits; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "forecast")]
    mode: ModeArg,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    window: WindowArgs,
    /// Test days `START..END`, counted from the first full day.
    #[arg(long)]
    test_days: Option<String>,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long, value_enum, default_value = "forecast")]
    mode: ModeArg,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    window: WindowArgs,
    /// Comma-separated candidate lengths, e.g. `30d,2m,3m`.
    #[arg(long)]
    grid: Option<String>,
    /// Validation days `START..END`.
    #[arg(long)]
    validation_days: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Input => 2,
                ErrorKind::Io => 3,
                ErrorKind::Solver => 4,
            })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Validate(args) => cmd_validate(&file, &args),
        Command::Synth(args) => cmd_synth(&file, &args),
        Command::Backtest(args) => cmd_backtest(&file, &args),
        Command::Tune(args) => cmd_tune(&file, &args),
    }
}

fn missing(flag: &str) -> Error {
    Error::InvalidConfig(format!("--{flag} is required (flag or config file)"))
}

fn synthetic_config(source: &str, seed: Option<u64>) -> Result<SyntheticConfig> {
    let mut cfg = if source == "default" {
        SyntheticConfig::default()
    } else {
        SyntheticConfig::from_toml(&std::fs::read_to_string(source)?)?
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Loads the dataset named by flags or config, printing the load summary when
/// `verbose_summary` is set.
fn load_dataset(file: &FileConfig, args: &DataArgs, verbose_summary: bool) -> Result<MarketDataset> {
    let seed = args.seed.or(file.seed);
    let synthetic = args.synthetic.clone().or_else(|| {
        if args.data.is_some() {
            None
        } else {
            file.synthetic.as_ref().map(|p| p.display().to_string())
        }
    });
    if let Some(source) = synthetic {
        let cfg = synthetic_config(&source, seed)?;
        let dataset = generate_synthetic(&cfg)?;
        if verbose_summary {
            println!("synthetic dataset: {} hours from {}", dataset.len(), cfg.start.to_rfc3339());
        }
        return Ok(dataset);
    }
    let data = args.data.clone().or_else(|| file.data.clone()).ok_or_else(|| missing("data"))?;
    let schema_path = args.schema.clone().or_else(|| file.schema.clone()).ok_or_else(|| missing("schema"))?;
    let schema = DatasetSchema::from_toml(&std::fs::read_to_string(&schema_path)?)?;
    let (dataset, report) = load_csv_with_report(&data, &schema)?;
    if verbose_summary {
        println!("rows: {}", report.data_rows);
        println!("hours: {}", report.hours);
        println!("range: {} .. {}", report.start, report.end);
        for (column, n) in &report.missing {
            println!("missing {column}: {n}");
        }
        println!("clipped target values: {}", report.clipped_target);
    }
    Ok(dataset)
}

fn cmd_validate(file: &FileConfig, args: &DataArgs) -> Result<()> {
    load_dataset(file, args, true)?;
    println!("ok");
    Ok(())
}

fn cmd_synth(file: &FileConfig, args: &SynthArgs) -> Result<()> {
    let source = args
        .synthetic
        .as_ref()
        .or(file.synthetic.as_ref())
        .map(|p| p.display().to_string())
        .unwrap_or_else(|| "default".into());
    let mut cfg = synthetic_config(&source, args.seed.or(file.seed))?;
    if let Some(n) = args.n_hours {
        cfg.n_hours = n;
        cfg.validate()?;
    }
    let out = args.out.clone().or_else(|| file.out.clone()).ok_or_else(|| missing("out"))?;
    let dataset = generate_synthetic(&cfg)?;
    let f = std::fs::File::create(&out)?;
    dataset.write_csv(std::io::BufWriter::new(f))?;
    let schema_path = schema_path_for(&out);
    std::fs::write(&schema_path, dataset.schema.to_toml())?;
    println!("wrote {} rows to {}", dataset.len(), out.display());
    println!("wrote schema to {}", schema_path.display());
    Ok(())
}

fn schema_path_for(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".schema.toml");
    csv.with_file_name(name)
}

fn resolve_spec(file: &FileConfig, args: &WindowArgs, dataset: &MarketDataset) -> Result<ModelSpec> {
    match args.spec.as_ref().or(file.spec.as_ref()) {
        Some(s) => ModelSpec::parse_inline(file.models.get(s).unwrap_or(s)),
        None => Ok(ModelSpec::new(dataset.features.keys().cloned())),
    }
}

fn backtest_config(file: &FileConfig, args: &WindowArgs) -> Result<BacktestConfig> {
    let mut window = WindowConfig::default();
    if let Some(m) = args.month_days.or(file.month_days) {
        window.month_days = m;
    }
    if let Some(l) = args.window_days.as_ref().or(file.window_days.as_ref()) {
        window.training_days = window.parse_length(l)?;
    }
    if let Some(g) = args.gap_days.or(file.gap_days) {
        window.gap_days = g;
    }
    if let Some(l) = args.trade_window_days.as_ref().or(file.trade_window_days.as_ref()) {
        window.trading_days = Some(window.parse_length(l)?);
    }
    if let Some(r) = args.retrain_every.or(file.retrain_every) {
        window.retrain_every = r;
    }
    window.validate()?;
    let benchmark = args.benchmark.clone().or_else(|| file.benchmark.clone()).unwrap_or_else(|| SYNTHETIC_BENCHMARK.into());
    let mut config = BacktestConfig::new(window, benchmark);
    if args.unit_costs || file.unit_costs == Some(true) {
        config.costs = CostSource::Unit;
    }
    config.jobs = args.jobs.or(file.jobs).unwrap_or(0);
    Ok(config)
}

fn fmt_pct(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}%")).unwrap_or_else(|| "undefined".into())
}

fn print_summary(report: &BacktestReport) {
    println!("test days: {} (skipped {})", report.test_days, report.skipped.len());
    println!("{:<12} {:>14} {:>14} {:>14}", "strategy", "MAE", "RMSE", "AOL");
    for (name, m) in &report.aggregates {
        println!("{:<12} {:>14.6} {:>14.6} {:>14.6}", name, m.mae, m.rmse, m.aol);
    }
    for (name, r) in &report.reductions {
        println!(
            "{name} reduction vs benchmark: MAE {} RMSE {} AOL {}",
            fmt_pct(r.mae),
            fmt_pct(r.rmse),
            fmt_pct(r.aol)
        );
    }
}

fn cmd_backtest(file: &FileConfig, args: &RunArgs) -> Result<()> {
    let out = args.window.out.clone().or_else(|| file.out.clone()).ok_or_else(|| missing("out"))?;
    let dataset = load_dataset(file, &args.data, false)?;
    let spec = resolve_spec(file, &args.window, &dataset)?;
    let mut config = backtest_config(file, &args.window)?;
    if let Some(r) = args.test_days.as_ref().or(file.test_days.as_ref()) {
        config.test_days = Some(parse_day_range(r)?);
    }
    info!("columns: {:?}", spec.column_names());
    let report = run_backtest(args.mode.into(), &dataset, &spec, &config)?;
    let written = write_report(&report, &out)?;
    print_summary(&report);
    println!("wrote {} files to {}", written.len(), out.display());
    Ok(())
}

fn cmd_tune(file: &FileConfig, args: &TuneArgs) -> Result<()> {
    let out = args.window.out.clone().or_else(|| file.out.clone()).ok_or_else(|| missing("out"))?;
    let dataset = load_dataset(file, &args.data, false)?;
    let spec = resolve_spec(file, &args.window, &dataset)?;
    let config = backtest_config(file, &args.window)?;
    let grid_text = args.grid.as_ref().or(file.grid.as_ref()).ok_or_else(|| missing("grid"))?;
    let grid = grid_text
        .split(',')
        .map(|t| config.window.parse_length(t))
        .collect::<Result<Vec<_>>>()?;
    let validation = parse_day_range(
        args.validation_days.as_ref().or(file.validation_days.as_ref()).ok_or_else(|| missing("validation-days"))?,
    )?;
    let tune = tune_window_length(&dataset, &spec, &grid, validation, &config, args.mode.into())?;
    write_tuning(&tune, &out)?;
    for e in &tune.entries {
        if e.available {
            println!("{:>5}d  score {}", e.length_days, fmt_pct(e.score));
        } else {
            println!("{:>5}d  unavailable", e.length_days);
        }
    }
    match tune.selected {
        Some(l) => println!("selected: {l} days"),
        None => println!("selected: none"),
    }
    Ok(())
}
